#include "filtrationlab/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace filtrationlab {

Driver DriverParams::driver() const {
    const DriverParams p = *this;
    return [p](int, int, double z) { return p.dt * (p.c - p.r * z - p.s * std::max(z, 0.0)); };
}

namespace {

/// First atom of each cell with θ > alive_after, or -1.
std::vector<int> survivors(const EnlargementPair& pair, const Partition& cells, int alive_after) {
    std::vector<int> rep(cells.cells(), -1);
    for (int c = 0; c < cells.cells(); ++c)
        for (int a : cells.members(c))
            if (pair.alive(alive_after, a)) {
                rep[c] = a;
                break;
            }
    return rep;
}

/// z = c + g(z) by damped iteration.
double solve_node(double c, const std::function<double(double)>& g, const FixedPoint& fp, int t, int atom) {
    double z = c;
    for (int k = 0; k < fp.max_iter; ++k) {
        const double target = c + g(z);
        if (std::abs(target - z) <= fp.tol * std::max(1.0, std::abs(z)))
            return target;
        z += fp.damping * (target - z);
    }
    std::ostringstream msg;
    msg << "bsde: fixed point did not converge at node (t=" << t << ", atom=" << atom << ") after "
        << fp.max_iter << " iterations";
    throw Error(msg.str());
}

/// Index of the frozen value of X^{θ−} stopped at T.
int frozen_index(const EnlargementPair& pair, int t, int atom) {
    const int th = pair.theta()(atom);
    return std::min({t, th - 1, pair.maturity()});
}

} // namespace

BsdeSpec BsdeSpec::make(const EnlargementPair& pair, const AzemaBundle& bundle, Driver g, const Process& G) {
    const auto& space = pair.space();
    require_shape(space, G, "bsde recovery");
    require(is_predictable(space, G, Filt::G), "bsde: recovery G is not G-predictable");
    require(static_cast<bool>(g), "bsde: empty driver");
    for (int t = 1; t <= pair.maturity(); ++t) {
        const Partition& cells = space.partition(Filt::G, t - 1);
        for (int c = 0; c < cells.cells(); ++c) {
            const int first = cells.members(c).front();
            for (double z : {-1.0, 0.0, 1.0})
                for (int a : cells.members(c))
                    require(g(t, a, z) == g(t, first, z),
                            "bsde: driver is not G_{t-1}-measurable at t=" + std::to_string(t));
        }
    }

    BsdeSpec spec;
    spec.g = std::move(g);
    spec.G = G;
    spec.dv = Process(increments(bundle.v.values()), Filt::G, ProcessClass::predictable);
    spec.dv_reduced = bundle.dv_reduced;
    spec.G_reduced = reduce(pair, bundle, G, ReductionKind::predictable);
    spec.maturity = pair.maturity();

    const Process red = reduce(pair, bundle, spec.dv, ReductionKind::predictable);
    const Paths<double> sm = bundle.S_minus();
    for (int t = 1; t <= pair.horizon(); ++t)
        for (int a = 0; a < pair.atoms(); ++a)
            if (sm(t, a) > 0.0)
                require(std::abs(red(t, a) - spec.dv_reduced(t, a)) <= 1e-14,
                        "bsde: reduced hazard does not reduce the compensator increments");
    for (int t = 0; t <= pair.horizon(); ++t)
        for (int a = 0; a < pair.atoms(); ++a)
            require(spec.dv(t, a) >= -1e-12 && spec.dv(t, a) <= 1.0 + 1e-12,
                    "bsde: hazard increment " + std::to_string(spec.dv(t, a)) + " outside [0,1]");
    return spec;
}

BsdeSpec BsdeSpec::make(const EnlargementPair& pair, const AzemaBundle& bundle, const DriverParams& p,
                        double recovery, double slope) {
    Paths<double> G(pair.horizon() + 1, pair.atoms());
    for (int t = 0; t <= pair.horizon(); ++t)
        G.row(t).setConstant(recovery + slope * t);
    return make(pair, bundle, p.driver(), Process(G, Filt::G, ProcessClass::predictable));
}

double BsdeSpec::g_reduced(const EnlargementPair& pair, int t, int atom, double z) const {
    const Partition& cells = pair.space().partition(Filt::F, t - 1);
    for (int a : cells.members(cells.cell_of(atom)))
        if (pair.alive(t - 1, a))
            return g(t, a, z);
    return 0.0;
}

Process solve_full(const EnlargementPair& pair, const BsdeSpec& spec, const FixedPoint& fp) {
    const auto& space = pair.space();
    const auto& w = space.weights();
    const int T = pair.maturity();
    const int n = pair.atoms();
    Paths<double> raw = Paths<double>::Zero(T + 1, n);
    for (int t = T; t >= 1; --t) {
        const Partition& cells = space.partition(Filt::G, t - 1);
        const auto rep = survivors(pair, cells, t - 1);
        for (int c = 0; c < cells.cells(); ++c) {
            const int r = rep[c];
            if (r < 0)
                continue;
            double mass = 0.0, acc = 0.0;
            for (int a : cells.members(c)) {
                mass += w(a);
                if (pair.alive(t, a))
                    acc += w(a) * raw(t, a);
            }
            const double cst = acc / mass + spec.G(t, r) * spec.dv(t, r);
            const double z = solve_node(cst, [&](double x) { return spec.g(t, r, x); }, fp, t - 1, r);
            for (int a : cells.members(c))
                raw(t - 1, a) = z;
        }
    }
    Paths<double> out = Paths<double>::Zero(pair.horizon() + 1, n);
    for (int a = 0; a < n; ++a) {
        if (pair.theta()(a) == 0)
            continue;
        for (int t = 0; t <= pair.horizon(); ++t)
            out(t, a) = raw(frozen_index(pair, t, a), a);
    }
    return Process(out, Filt::G, ProcessClass::optional);
}

namespace {

enum class ReducedMeasure { Q, P };

Process solve_reduced(const EnlargementPair& pair, const AzemaBundle& bundle, const BsdeSpec& spec,
                      const Weights<double>& w, ReducedMeasure measure, const FixedPoint& fp) {
    const auto& space = pair.space();
    const int T = pair.maturity();
    const int n = pair.atoms();
    Paths<double> U = Paths<double>::Zero(pair.horizon() + 1, n);
    for (int t = T; t >= 1; --t) {
        const Partition& cells = space.partition(Filt::F, t - 1);
        Row<double> next(n);
        for (int a = 0; a < n; ++a)
            next(a) = measure == ReducedMeasure::Q ? bundle.S(t, a) * U(t, a) : U(t, a);
        const Row<double> ce = cond_exp(next, cells, w);
        for (int c = 0; c < cells.cells(); ++c) {
            const int r = cells.members(c).front();
            const double sm = bundle.S(t - 1, r);
            if (sm <= 0.0)
                continue;
            const double dv = spec.dv_reduced(t, r);
            const double carry = measure == ReducedMeasure::Q ? ce(r) / sm : (1.0 - dv) * ce(r);
            const double cst = carry + spec.G_reduced(t, r) * dv;
            const double z =
                solve_node(cst, [&](double x) { return spec.g_reduced(pair, t, r, x); }, fp, t - 1, r);
            for (int a : cells.members(c))
                U(t - 1, a) = z;
        }
    }
    return Process(U, Filt::F, ProcessClass::optional);
}

} // namespace

Process solve_reduced_Q(const EnlargementPair& pair, const AzemaBundle& bundle, const BsdeSpec& spec,
                        const FixedPoint& fp) {
    return solve_reduced(pair, bundle, spec, pair.space().weights(), ReducedMeasure::Q, fp);
}

Process solve_reduced_P(const EnlargementPair& pair, const AzemaBundle& bundle, const BsdeSpec& spec,
                        const DensityPair& d, const FixedPoint& fp) {
    const auto check = verify_condition_A(pair, d, SpanningMode::full);
    require(check.holds, "bsde: the density passed to the reduced P equation is not an invariance measure");
    return solve_reduced(pair, bundle, spec, d.p_weights(), ReducedMeasure::P, fp);
}

Process reduced_drift(const EnlargementPair& pair, const BsdeSpec& spec, const Process& U) {
    const int n = pair.atoms();
    const int T = pair.maturity();
    Paths<double> inc = Paths<double>::Zero(pair.horizon() + 1, n);
    for (int t = 1; t <= T; ++t)
        for (int a = 0; a < n; ++a) {
            bool any_alive = false;
            const Partition& cells = pair.space().partition(Filt::F, t - 1);
            for (int b : cells.members(cells.cell_of(a)))
                any_alive = any_alive || pair.alive(t - 1, b);
            if (!any_alive)
                continue;
            const double u = U(t - 1, a);
            inc(t, a) = spec.g_reduced(pair, t, a, u) + (spec.G_reduced(t, a) - u) * spec.dv_reduced(t, a);
        }
    return Process(accumulate(inc), Filt::F, ProcessClass::predictable);
}

Process full_drift(const EnlargementPair& pair, const BsdeSpec& spec, const Process& Z) {
    const int n = pair.atoms();
    const int T = pair.maturity();
    Paths<double> inc = Paths<double>::Zero(pair.horizon() + 1, n);
    for (int a = 0; a < n; ++a) {
        const int last = std::min(pair.theta()(a), T);
        for (int t = 1; t <= last; ++t) {
            const double z = Z(t - 1, a);
            inc(t, a) = spec.g(t, a, z) + (spec.G(t, a) - z) * spec.dv(t, a);
        }
    }
    return Process(accumulate(inc), Filt::G, ProcessClass::predictable);
}

MartingaleCheck<double> full_residual(const EnlargementPair& pair, const BsdeSpec& spec, const Process& Z) {
    return is_martingale(pair.space(), Z + full_drift(pair, spec, Z), Filt::G, 1e-9);
}

MartingaleCheck<double> reduced_Q_residual(const EnlargementPair& pair, const AzemaBundle& bundle,
                                           const BsdeSpec& spec, const Process& U) {
    const Paths<double> dA = increments(reduced_drift(pair, spec, U).values());
    const Paths<double> dU = increments(U.values());
    const Paths<double> sm = bundle.S_minus();
    const auto window = bundle.S_minus_positive(pair);
    Paths<double> inc = Paths<double>::Zero(pair.horizon() + 1, pair.atoms());
    for (int t = 1; t <= pair.horizon(); ++t)
        for (int a = 0; a < pair.atoms(); ++a)
            if (window.contains(t, a))
                inc(t, a) = bundle.S(t, a) * dU(t, a) + sm(t, a) * dA(t, a);
    return is_martingale(pair.space(), Process(accumulate(inc), Filt::F, ProcessClass::optional), Filt::F, 1e-9,
                         &window);
}

MartingaleCheck<double> reduced_P_residual(const EnlargementPair& pair, const AzemaBundle& bundle,
                                           const BsdeSpec& spec, const Process& U, const DensityPair& d) {
    const Paths<double> dA = increments(reduced_drift(pair, spec, U).values());
    const Paths<double> dU = increments(U.values());
    const auto window = bundle.S_minus_positive(pair);
    Paths<double> inc = Paths<double>::Zero(pair.horizon() + 1, pair.atoms());
    for (int t = 1; t <= pair.horizon(); ++t)
        for (int a = 0; a < pair.atoms(); ++a)
            if (window.contains(t, a))
                inc(t, a) = (1.0 - spec.dv_reduced(t, a)) * dU(t, a) + dA(t, a);
    return is_martingale(pair.space(), Process(accumulate(inc), Filt::F, ProcessClass::optional), Filt::F,
                         d.p_weights(), 1e-9, &window);
}

Process stop_before_theta(const EnlargementPair& pair, const Process& U) {
    Paths<double> out = Paths<double>::Zero(pair.horizon() + 1, pair.atoms());
    for (int a = 0; a < pair.atoms(); ++a) {
        if (pair.theta()(a) == 0)
            continue;
        for (int t = 0; t <= pair.horizon(); ++t)
            out(t, a) = U(frozen_index(pair, t, a), a);
    }
    return Process(out, Filt::G, ProcessClass::optional);
}

double transfer_gap(const EnlargementPair& pair, const Process& Z, const Process& U) {
    return (Z.values() - stop_before_theta(pair, U).values()).cwiseAbs().maxCoeff();
}

double drift_identity_gap(const EnlargementPair& pair, const BsdeSpec& spec, const Process& Z, const Process& U) {
    const Process lhs = Z + full_drift(pair, spec, Z);
    const Process rhs = stop_before_theta(pair, U) + stop(reduced_drift(pair, spec, U), pair.theta(), StopMode::at);
    double gap = 0.0;
    for (int a = 0; a < pair.atoms(); ++a) {
        if (pair.theta()(a) == 0)
            continue;
        for (int t = 0; t <= pair.horizon(); ++t)
            gap = std::max(gap, std::abs(lhs(t, a) - rhs(t, a)));
    }
    return gap;
}

double BsdeSolution::max_residual() const {
    double m = std::max({full_residual, reduced_Q_residual, reduce_gap, transfer_gap, drift_identity_gap});
    if (reduced_P_residual)
        m = std::max(m, *reduced_P_residual);
    if (transfer_gap_P)
        m = std::max(m, *transfer_gap_P);
    return m;
}

BsdeSolution solve_all(const EnlargementPair& pair, const AzemaBundle& bundle, const BsdeSpec& spec,
                       const std::optional<DensityPair>& d, const FixedPoint& fp) {
    BsdeSolution sol;
    sol.Z = solve_full(pair, spec, fp);
    sol.U = solve_reduced_Q(pair, bundle, spec, fp);
    sol.full_residual = full_residual(pair, spec, sol.Z).residual;
    sol.reduced_Q_residual = reduced_Q_residual(pair, bundle, spec, sol.U).residual;
    sol.transfer_gap = transfer_gap(pair, sol.Z, sol.U);
    sol.drift_identity_gap = drift_identity_gap(pair, spec, sol.Z, sol.U);

    const Process reduced = reduce(pair, bundle, sol.Z, ReductionKind::optional);
    for (int t = 0; t <= pair.maturity(); ++t)
        for (int a = 0; a < pair.atoms(); ++a)
            if (bundle.S(t, a) > 0.0)
                sol.reduce_gap = std::max(sol.reduce_gap, std::abs(reduced(t, a) - sol.U(t, a)));

    if (d) {
        sol.U_P = solve_reduced_P(pair, bundle, spec, *d, fp);
        sol.reduced_P_residual = reduced_P_residual(pair, bundle, spec, *sol.U_P, *d).residual;
        sol.transfer_gap_P = transfer_gap(pair, sol.Z, *sol.U_P);
    }
    return sol;
}

void write_csv(std::ostream& os, const EnlargementPair& pair, const BsdeSolution& sol) {
    const auto old = os.precision(17);
    os << "t,atom,Z,U\n";
    for (int t = 0; t <= pair.maturity(); ++t)
        for (int a = 0; a < pair.atoms(); ++a)
            os << t << ',' << pair.space().atom_id(a) << ',' << sol.Z(t, a) << ',' << sol.U(t, a) << '\n';
    os.precision(old);
}

} // namespace filtrationlab
