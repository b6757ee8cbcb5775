#pragma once

#include "filtrationlab/lattice.hpp"

#include <string>
#include <vector>

namespace filtrationlab {

/// Outcome of the condition-(B) test: G_t ⊆ F̄_t for every t, where F̄_t collects the sets
/// that agree with an F_t set on {t < θ}. On a finite space this means: inside each F_t cell at
/// most one G_t cell meets {θ > t}.
struct ConditionB {
    bool holds = true;
    int t = -1;                 ///< witness time
    int f_cell = -1;            ///< F_t cell containing two pre-θ G_t cells
    std::vector<int> g_cells;   ///< the G_t cells that split it before θ
    std::string describe() const;
};

ConditionB check_condition_B(const FiniteFilteredSpace& space, const RandomTime& theta);

/// (F, G, θ) together with the analysis horizon T ≤ space.horizon().
/// Construction requires θ to be a G stopping time and condition (B).
class EnlargementPair {
public:
    EnlargementPair() = default;
    EnlargementPair(FiniteFilteredSpace space, RandomTime theta, int maturity = -1);

    const FiniteFilteredSpace& space() const { return space_; }
    const RandomTime& theta() const { return theta_; }
    int maturity() const { return maturity_; }
    int horizon() const { return space_.horizon(); }
    int atoms() const { return space_.atoms(); }

    bool alive(int t, int atom) const { return theta_(atom) > t; }
    /// J = 1_{[0,θ)}.
    Process survival_indicator() const;
    /// H = 1_{[θ,∞)}.
    Process default_indicator() const;
    /// [0, T] as a predictable set of the given filtration.
    PredictableSet until_maturity(Filt tag) const { return PredictableSet::up_to(space_, tag, maturity_); }

private:
    FiniteFilteredSpace space_;
    RandomTime theta_;
    int maturity_ = 0;
};

/// S, its Doob–Meyer and multiplicative decompositions, the compensator of θ and the zero times of S.
struct AzemaBundle {
    Process S;            ///< Q(θ > t | F_t)
    Process mart_part;    ///< martingale part of S (M_0 = 0)
    Process D;            ///< predictable increasing part, S = S_0 + mart_part − D
    Process pS;           ///< predictable projection of S
    Process Qcal;         ///< 𝓔(1_{ᵖS>0}(1/ᵖS)·mart_part)
    Process Dcal;         ///< 𝓔(−1_{S₋>0}(1/S₋)·D)
    Process survival_exp; ///< 𝓔(1_{ᵖS>0}(1/ᵖS)·D)
    Process A_dual_opt;   ///< dual optional projection of H
    Process v;            ///< G-compensator of θ: Σ_{s≤t∧θ} ΔD_s / S_{s−1}
    Process dv_reduced;   ///< F-predictable reduction of Δv: ΔD_t / S_{t−1} on {S_{t−1} > 0}
    Process B;            ///< dual predictable projection of Δ_θ(mart_part)·1_{θ≤·}
    RandomTime varsigma;  ///< first t with S_t = 0
    RandomTime sigma3;    ///< first t ≥ 1 with ᵖS_t = 0 < S_{t−1}

    Paths<double> S_minus() const { return lagged(S.values()); }
    /// {S₋ > 0} ∩ [0,T] and {ᵖS > 0} ∩ [0,T], both F-predictable.
    PredictableSet S_minus_positive(const EnlargementPair& pair) const;
    PredictableSet pS_positive(const EnlargementPair& pair) const;

    /// ςₙ = first t with S_t ≤ 1/n.
    RandomTime varsigma_n(int n) const;
    /// ζₙ = (first t ≥ 1 with ᵖS_t ≤ 1/n) − 1, so that 1/ᵖS ≤ n on (0, ζₙ].
    RandomTime zeta_n(int n) const;
    /// Smallest n after which ςₙ and ζₙ no longer change.
    int stable_index() const;
};

AzemaBundle azema_bundle(const EnlargementPair& pair);

/// Dual predictable projection of Δ_θX·1_{θ≤·}.
Process theta_jump_compensator(const EnlargementPair& pair, const Process& x);

/// J₋/S₋ as a G-predictable integrand (0 after θ).
Process survival_ratio(const EnlargementPair& pair, const AzemaBundle& bundle);

enum class ReductionKind { optional, predictable };

/// F process agreeing with the G process L on [0,θ) (optional) or (0,θ] (predictable).
/// Zero outside the uniqueness set {S > 0} (resp. {S₋ > 0}). Two independent constructions
/// (conditional expectation and direct cell lookup) are compared; a mismatch throws.
Process reduce(const EnlargementPair& pair, const AzemaBundle& bundle, const Process& L, ReductionKind kind);

/// F stopping time ρ with {τ < θ} = {ρ < θ} ⊆ {τ = ρ}.
RandomTime reduce_time(const EnlargementPair& pair, const RandomTime& tau);

struct JeulinYor {
    Process angle;              ///< ⟨S, Qm⟩
    Process B;                  ///< dual predictable projection of Δ_θQm·1_{θ≤·}
    Process compensated_before; ///< Qm^{θ−} − (J₋/S₋)·⟨S,Qm⟩
    Process compensated_at;     ///< Qm^{θ} − (J₋/S₋)·(⟨S,Qm⟩ + B)
};

JeulinYor jeulin_yor(const EnlargementPair& pair, const AzemaBundle& bundle, const Process& Qm);

/// Larger of the (G,Q) martingale residuals of both compensated forms.
double jeulin_yor_residual(const EnlargementPair& pair, const AzemaBundle& bundle, const Process& Qm);

/// Residuals of the exact identities the bundle must satisfy.
struct AzemaIdentities {
    double decomposition = 0.0;  ///< |S − (S₀ + mart_part − D)|
    double SS = 0.0;             ///< |ᵖS − (S₋ − ΔD)| on t ≥ 1
    double multdec = 0.0;        ///< |𝓔((1/ᵖS)·D)·𝒟 − 1| on {ᵖS > 0}
    double pS_zero_mart = 0.0;   ///< |Δmart_part| on {ᵖS = 0}
    double S_before_theta = 1.0; ///< min S_{θ−1} over {0 < θ ≤ H}, 1 when empty
    double compensator = 0.0;    ///< (G,Q) martingale residual of 1_{θ≤·} − v
    double max_residual() const;
};

AzemaIdentities azema_identities(const EnlargementPair& pair, const AzemaBundle& bundle);

struct InvarianceLemmaCheck {
    MartingaleCheck<double> premise;     ///< S₋·K + [S,K] on {S₋>0}∩[0,T] under (F,Q)
    MartingaleCheck<double> conclusion;  ///< K^{θ−} on [0,T] under (G,Q)
    double reduction_gap = 0.0;          ///< max |M₋ − K₋| on (0,θ] (converse only)
    bool implication_holds(double tol) const {
        return !(premise.residual <= tol) || conclusion.residual <= tol;
    }
};

/// Forward direction: evaluates premise and conclusion for an F process K.
InvarianceLemmaCheck invariance_lemma_forward(const EnlargementPair& pair, const AzemaBundle& bundle,
                                              const Process& K, double tol);

/// Converse: for a (G,Q)-martingale M with no jump at θ, its optional reduction K must satisfy the premise,
/// and 1_{S₋>0}K₋ must be a predictable reduction of M₋.
InvarianceLemmaCheck invariance_lemma_converse(const EnlargementPair& pair, const AzemaBundle& bundle,
                                               const Process& M, double tol);

} // namespace filtrationlab
