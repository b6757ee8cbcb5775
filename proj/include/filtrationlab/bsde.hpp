#pragma once

#include "filtrationlab/invariance.hpp"

#include <functional>
#include <iosfwd>

namespace filtrationlab {

/// g_t(z) at a node. Must depend on the atom only through its G_{t-1} cell.
using Driver = std::function<double(int t, int atom, double z)>;

/// g_t(z) = dt·(c − r·z − s·max(z, 0)); the form scenario files can carry.
struct DriverParams {
    double r = 0.0;
    double s = 0.0;
    double c = 0.0;
    double dt = 1.0;
    Driver driver() const;
};

struct BsdeSpec {
    Driver g;
    Process G;           ///< recovery, G-predictable
    Process dv;          ///< Δv_t on (0,θ], 0 elsewhere
    Process dv_reduced;  ///< Δv′_t, F-predictable
    Process G_reduced;   ///< G′, F-predictable reduction of G
    int maturity = 0;

    /// Hazard from the Azéma bundle. Checks that G is predictable and that Δv′ reduces Δv.
    static BsdeSpec make(const EnlargementPair& pair, const AzemaBundle& bundle, Driver g, const Process& G);
    /// Constant-plus-slope recovery G_t = recovery + slope·t.
    static BsdeSpec make(const EnlargementPair& pair, const AzemaBundle& bundle, const DriverParams& p,
                         double recovery, double slope = 0.0);

    /// g′_t(z): the driver read at a surviving atom of the same F_{t-1} cell.
    double g_reduced(const EnlargementPair& pair, int t, int atom, double z) const;
};

struct FixedPoint {
    int max_iter = 100;
    double tol = 1e-12;
    double damping = 0.8;
};

/// Returns Z stopped before θ and at T: Z_T = 0 on {θ > T}, frozen at Z_{θ−1} from θ on, 0 on {θ = 0}.
/// Each step solves Z_{t−1} = E[1_{θ>t}Z_t | G_{t−1}] + g_t(Z_{t−1}) + G_tΔv_t.
Process solve_full(const EnlargementPair& pair, const BsdeSpec& spec, const FixedPoint& fp = {});

/// On {S_{t−1} > 0}: S_{t−1}U_{t−1} = E[S_tU_t | F_{t−1}] + S_{t−1}(g′_t(U_{t−1}) + G′_tΔv′_t), U_T = 0.
/// U = 0 where S_{t−1} = 0.
Process solve_reduced_Q(const EnlargementPair& pair, const AzemaBundle& bundle, const BsdeSpec& spec,
                        const FixedPoint& fp = {});

/// On {S_{t−1} > 0}: (1 − Δv′)ΔU + g′(U₋) + (G′ − U₋)Δv′ has zero P-mean, U_T = 0.
/// Throws unless d passes the condition (A) check.
Process solve_reduced_P(const EnlargementPair& pair, const AzemaBundle& bundle, const BsdeSpec& spec,
                        const DensityPair& d, const FixedPoint& fp = {});

/// F-predictable drift Σ g′(U₋) + (G′ − U₋)Δv′ over [1,T], or its G analogue from Z, G, Δv
/// summed over [1, θ∧T].
Process reduced_drift(const EnlargementPair& pair, const BsdeSpec& spec, const Process& U);
Process full_drift(const EnlargementPair& pair, const BsdeSpec& spec, const Process& Z);

/// Z^{θ∧T−} + G-drift as a G-process; the full equation asks for a (G,Q)-martingale.
MartingaleCheck<double> full_residual(const EnlargementPair& pair, const BsdeSpec& spec, const Process& Z);
/// S·ΔU + S₋·ΔA on {S₋>0}∩[0,T], which is S₋·Ū + [S,Ū] where ᵖS > 0 (Ū carries the drift scaled by S₋/ᵖS).
MartingaleCheck<double> reduced_Q_residual(const EnlargementPair& pair, const AzemaBundle& bundle,
                                           const BsdeSpec& spec, const Process& U);
/// (1 − Δv′)ΔU + ΔA on {S₋>0}∩[0,T] under (F,P).
MartingaleCheck<double> reduced_P_residual(const EnlargementPair& pair, const AzemaBundle& bundle,
                                           const BsdeSpec& spec, const Process& U, const DensityPair& d);

/// U^{θ−} in the same convention as solve_full.
Process stop_before_theta(const EnlargementPair& pair, const Process& U);

/// max |Z − U^{θ−}| over nodes with θ ≥ 1.
double transfer_gap(const EnlargementPair& pair, const Process& Z, const Process& U);

/// max |Z^{θ∧T−} + full drift − (U^{θ−} + reduced drift stopped at θ∧T)|.
double drift_identity_gap(const EnlargementPair& pair, const BsdeSpec& spec, const Process& Z, const Process& U);

struct BsdeSolution {
    Process Z;
    Process U;
    std::optional<Process> U_P;
    double full_residual = 0.0;
    double reduced_Q_residual = 0.0;
    std::optional<double> reduced_P_residual;
    double reduce_gap = 0.0;    ///< reduce(Z) against U on {S > 0}
    double transfer_gap = 0.0;  ///< Z against U^{θ−}
    std::optional<double> transfer_gap_P;
    double drift_identity_gap = 0.0;
    double max_residual() const;
};

/// Solves all forms and cross-checks them. The P form runs when an invariance density is given.
BsdeSolution solve_all(const EnlargementPair& pair, const AzemaBundle& bundle, const BsdeSpec& spec,
                       const std::optional<DensityPair>& d, const FixedPoint& fp = {});

/// Columns t, atom, Z, U over t ≤ T.
void write_csv(std::ostream& os, const EnlargementPair& pair, const BsdeSolution& sol);

} // namespace filtrationlab
