#pragma once

#include "filtrationlab/enlargement.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace filtrationlab {

enum class Verdict { invariant, not_invariant };
enum class FailedClause { none, positivity, true_martingale, condition_B, direct_check };

const char* to_string(Verdict v);
const char* to_string(FailedClause c);

/// 𝒬 on [0,T], held constant after T.
struct CandidateDensity {
    Process q;
    bool positive = false;     ///< q > 0 on [0,T]
    double mass_defect = 0.0;  ///< |E[q_T] − 1|
    DensityPair density;       ///< equivalent() only when positive
};

CandidateDensity candidate_density(const EnlargementPair& pair, const AzemaBundle& bundle);

/// The three positivity conditions, evaluated independently.
struct PositivityCheck {
    bool exp_positive = false;       ///< (i)  𝒬 > 0 on [0,T]
    bool pS_zero_at_varsigma = false;///< (ii) ᵖS_ς = 0 on {ς ≤ T}
    bool varsigma_predictable = false;///< (iii) ς restricted to {ς ≤ T} is predictable
    RandomTime varsigma_restricted;
    bool agree() const { return exp_positive == pS_zero_at_varsigma && exp_positive == varsigma_predictable; }
    bool holds() const { return exp_positive; }
};

PositivityCheck positivity_check(const EnlargementPair& pair, const AzemaBundle& bundle);

struct TrueMartingaleCheck {
    double E_identity_gap = 0.0;   ///< |E[S₀𝒬_T] − E[S₀]|
    bool E_identity_holds = true;
    /// Nonnegative local martingales on a finite space are true martingales; the clause cannot bind here.
    bool automatic = true;
    double sfcnd_bound = 1.0;      ///< E[𝓔(1_{ᵖS>0}(1/ᵖS)·D)_{θ∧T}]
    std::vector<RandomTime> sigma_n;       ///< entry of 𝓔((1/ᵖS)·D) into [n,∞), capped at T; n = 1, 2, ...
    std::vector<double> sigma_n_bound;     ///< max of 𝓔((1/ᵖS)·D)_{σₙ}
    std::vector<double> ncsfcnd_residuals; ///< E[(D_T − D_{σₙ})𝓔((1/ᵖS)·D)_{σₙ}]
    bool residuals_monotone = true;
    bool residuals_vanish = true;          ///< last residual is 0 (σₙ ≡ T eventually)
};

TrueMartingaleCheck true_martingale_check(const EnlargementPair& pair, const AzemaBundle& bundle, double tol = 1e-12);

enum class SpanningMode { full, bounded_only };

struct ConditionACheck {
    bool holds = false;
    double residual = 0.0;
    FailedClause clause = FailedClause::none;  ///< positivity when the density is not equivalent
    int worst_t = -1;
    int worst_atom = -1;
};

/// Stops every member of a spanning family of (F,P)-martingales right before θ and tests it as a
/// (G,Q)-martingale on [0,T]. full: closed martingales P(e | F_t) of the F_T cells e; bounded_only:
/// one-jump martingales. Uses the fact that, under (B), only the per-(F_{t-1} cell, F_t child)
/// surviving masses enter the test.
ConditionACheck verify_condition_A(const EnlargementPair& pair, const DensityPair& d, SpanningMode mode,
                                   double tol = 1e-9);

/// Same verdict, computed literally: materialize each spanning martingale, stop it and run is_martingale in G.
ConditionACheck verify_condition_A_brute_force(const EnlargementPair& pair, const DensityPair& d, SpanningMode mode,
                                               double tol = 1e-9);

struct Part1Equivalence {
    bool direct = false;       ///< condition (A) by the spanning family
    bool qf = false;           ///< q_t = q_{t−1}(1 + Δmart_part_t/ᵖS_t) on {ᵖS>0}∩[0,T]
    bool cor = false;          ///< ᵖS·q̄ = mart_part on [0,T]
    double direct_residual = 0.0;
    double qf_residual = 0.0;
    double cor_residual = 0.0;
    /// q_T − q₀𝒬_T𝓔(1_{ᵖS=0}·q̄)_T, evaluated when all three hold.
    std::optional<double> yf_gap;
    bool agree() const { return direct == qf && qf == cor; }
};

Part1Equivalence theorem_part1_equivalence(const EnlargementPair& pair, const AzemaBundle& bundle,
                                           const DensityPair& d, double tol = 1e-9);

struct PCharacterization {
    MartingaleCheck<double> p_side;  ///< P ∈ M_{ᵖS>0, [0,T]}(F,P)
    MartingaleCheck<double> q_side;  ///< ᵖS·P + [mart_part,P] ∈ M_{ᵖS>0, [0,T]}(F,Q)
    bool agree() const { return p_side.holds == q_side.holds; }
};

PCharacterization p_martingale_characterization(const EnlargementPair& pair, const AzemaBundle& bundle,
                                                const DensityPair& d, const Process& P, double tol = 1e-9);

struct PseudoStoppingCheck {
    bool A_inf_equals_1 = false;
    bool Q_mart_zero = false;
    double mass_A_inf_not_1 = 0.0;  ///< Q(𝖠_∞ ≠ 1)
    Process A_minus_D;
};

PseudoStoppingCheck pseudo_stopping_check(const EnlargementPair& pair, const AzemaBundle& bundle, double tol = 1e-12);

struct DriftCancellation {
    double g_residual = 0.0;  ///< J·q·[p,P] + J₋(1/S₋)·⟨mart_part, P − q·[p,P]⟩ in M_{[0,T]}(G,Q)
    double f_residual = 0.0;  ///< S·q·[p,P] + [mart_part, P − q·[p,P]] in M_{S₋>0, [0,T]}(F,Q)
    int martingales = 0;
    double residual() const { return std::max(g_residual, f_residual); }
};

/// Runs over the one-jump (F,P)-martingales.
DriftCancellation drift_cancellation_check(const EnlargementPair& pair, const AzemaBundle& bundle,
                                           const DensityPair& d);

struct SurvivalBridge {
    double projection_gap = 0.0;         ///< ᵒ(𝓔·J) − S₀𝒬1_{ᵖS>0}
    MartingaleCheck<double> martingale;  ///< 𝓔·J on {ᵖS>0}∩[0,T] under (G,Q)
    bool restriction_applicable = false; ///< θ > 0 and S_T > 0
    double restriction_gap = 0.0;        ///< E[𝕊-density | F_T] − 𝒬_T
    bool holds(double tol) const {
        return projection_gap <= tol && martingale.holds && (!restriction_applicable || restriction_gap <= tol);
    }
};

SurvivalBridge survival_measure_bridge(const EnlargementPair& pair, const AzemaBundle& bundle, double tol = 1e-12);

struct InvarianceReport {
    Verdict verdict = Verdict::not_invariant;
    std::optional<DensityPair> witness;
    FailedClause failed_clause = FailedClause::none;
    std::map<std::string, double> residuals;
    PositivityCheck positivity;
    TrueMartingaleCheck true_martingale;
    PseudoStoppingCheck pseudo_stopping;
    std::string note;
};

/// Decides condition (A) through the candidate density, cross-checking every characterization.
/// A split between characterizations that must agree throws.
InvarianceReport decide(const EnlargementPair& pair, const AzemaBundle& bundle, double tol = 1e-9);

} // namespace filtrationlab
