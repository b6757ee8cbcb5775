#include "filtrationlab/enlargement.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

namespace filtrationlab {

std::string ConditionB::describe() const {
    if (holds)
        return "condition (B) holds";
    std::ostringstream os;
    os << "condition (B) fails at t=" << t << ": F cell " << f_cell << " meets {theta > t} in G cells";
    for (int g : g_cells)
        os << ' ' << g;
    return os.str();
}

ConditionB check_condition_B(const FiniteFilteredSpace& space, const RandomTime& theta) {
    ConditionB out;
    for (int t = 0; t <= space.horizon(); ++t) {
        const Partition& F = space.partition(Filt::F, t);
        const Partition& G = space.partition(Filt::G, t);
        for (int c = 0; c < F.cells(); ++c) {
            std::set<int> alive_cells;
            for (int a : F.members(c))
                if (theta(a) > t)
                    alive_cells.insert(G.cell_of(a));
            if (alive_cells.size() > 1) {
                out.holds = false;
                out.t = t;
                out.f_cell = c;
                out.g_cells.assign(alive_cells.begin(), alive_cells.end());
                return out;
            }
        }
    }
    return out;
}

EnlargementPair::EnlargementPair(FiniteFilteredSpace space, RandomTime theta, int maturity)
    : space_(std::move(space)), theta_(RandomTime(theta.values(), Filt::G)),
      maturity_(maturity < 0 ? space_.horizon() : maturity) {
    require(maturity_ >= 1 && maturity_ <= space_.horizon(), "maturity outside [1, horizon]");
    require_stopping_time(space_, theta_, "theta");
    const auto b = check_condition_B(space_, theta_);
    require(b.holds, b.describe());
}

Process EnlargementPair::survival_indicator() const {
    Paths<double> j(horizon() + 1, atoms());
    for (int t = 0; t <= horizon(); ++t)
        for (int a = 0; a < atoms(); ++a)
            j(t, a) = alive(t, a) ? 1.0 : 0.0;
    return Process(j, Filt::G, ProcessClass::optional);
}

Process EnlargementPair::default_indicator() const {
    Paths<double> h = Paths<double>::Ones(horizon() + 1, atoms()) - survival_indicator().values();
    return Process(h, Filt::G, ProcessClass::optional);
}

namespace {

RandomTime first_time(int horizon, int atoms, int from, const std::function<bool(int, int)>& hit) {
    std::vector<int> v(atoms, kNever);
    for (int a = 0; a < atoms; ++a)
        for (int t = from; t <= horizon; ++t)
            if (hit(t, a)) {
                v[a] = t;
                break;
            }
    return RandomTime(v, Filt::F);
}

Process from_increments(const Paths<double>& inc, ProcessClass cls) {
    return Process(accumulate(inc), Filt::F, cls);
}

/// 𝓔 straight from the increments, so that a factor 1 + ΔX = 0 gives an exact zero.
Process exp_from_increments(const Paths<double>& inc, ProcessClass cls) {
    Paths<double> e(inc.rows(), inc.cols());
    e.row(0).setOnes();
    for (Eigen::Index t = 1; t < inc.rows(); ++t)
        e.row(t) = e.row(t - 1).cwiseProduct((inc.row(t).array() + 1.0).matrix());
    return Process(e, Filt::F, cls);
}

} // namespace

PredictableSet AzemaBundle::S_minus_positive(const EnlargementPair& pair) const {
    const Paths<double> sm = S_minus();
    PredictableSet::Mask m = (sm.array() > 0.0);
    m.bottomRows(pair.horizon() - pair.maturity()).setConstant(false);
    return PredictableSet::from_mask(pair.space(), Filt::F, m);
}

PredictableSet AzemaBundle::pS_positive(const EnlargementPair& pair) const {
    PredictableSet::Mask m = (pS.values().array() > 0.0);
    m.bottomRows(pair.horizon() - pair.maturity()).setConstant(false);
    return PredictableSet::from_mask(pair.space(), Filt::F, m);
}

RandomTime AzemaBundle::varsigma_n(int n) const {
    require(n >= 1, "varsigma_n: n must be positive");
    const double level = 1.0 / n;
    return first_time(S.horizon(), S.atoms(), 0, [&](int t, int a) { return S(t, a) <= level; });
}

RandomTime AzemaBundle::zeta_n(int n) const {
    require(n >= 1, "zeta_n: n must be positive");
    const double level = 1.0 / n;
    auto rho = first_time(pS.horizon(), pS.atoms(), 1, [&](int t, int a) { return pS(t, a) <= level; });
    std::vector<int> v = rho.values();
    for (auto& x : v)
        if (x != kNever)
            --x;
    return RandomTime(v, Filt::F);
}

int AzemaBundle::stable_index() const {
    double smallest = 1.0;
    for (const auto* m : {&S.values(), &pS.values()})
        for (Eigen::Index i = 0; i < m->size(); ++i)
            if ((*m)(i) > 0.0)
                smallest = std::min(smallest, (*m)(i));
    return static_cast<int>(std::floor(1.0 / smallest)) + 1;
}

Process theta_jump_compensator(const EnlargementPair& pair, const Process& x) {
    const int H = pair.horizon();
    Paths<double> raw = Paths<double>::Zero(H + 1, pair.atoms());
    for (int a = 0; a < pair.atoms(); ++a) {
        const int th = pair.theta()(a);
        if (th == kNever || th == 0)
            continue;
        for (int t = th; t <= H; ++t)
            raw(t, a) = x(th, a) - x(th - 1, a);
    }
    return dual_projection(pair.space(), Process(raw, Filt::G, ProcessClass::raw), Projection::predictable, Filt::F);
}

Process survival_ratio(const EnlargementPair& pair, const AzemaBundle& bundle) {
    Paths<double> r = Paths<double>::Zero(pair.horizon() + 1, pair.atoms());
    for (int t = 0; t <= pair.horizon(); ++t) {
        const int prev = t == 0 ? 0 : t - 1;
        for (int a = 0; a < pair.atoms(); ++a)
            if (pair.alive(prev, a))
                r(t, a) = 1.0 / bundle.S(prev, a);
    }
    return Process(r, Filt::G, ProcessClass::predictable);
}

AzemaBundle azema_bundle(const EnlargementPair& pair) {
    const auto& space = pair.space();
    const int H = pair.horizon();
    const int n = pair.atoms();
    AzemaBundle b;
    b.S = project(space, pair.survival_indicator(), Projection::optional, Filt::F);
    b.pS = project(space, b.S, Projection::predictable, Filt::F);
    const Paths<double> sm = b.S_minus();

    // ΔD = S₋ − ᵖS and Δmart_part = S − ᵖS, so that ᵖS = 0 gives ΔD = S₋ and Δmart_part = 0 exactly.
    Paths<double> dD = sm - b.pS.values();
    Paths<double> dQ = b.S.values() - b.pS.values();
    dD.row(0).setZero();
    dQ.row(0).setZero();
    b.D = from_increments(dD, ProcessClass::predictable);
    b.mart_part = from_increments(dQ, ProcessClass::optional);

    Paths<double> q_inc = Paths<double>::Zero(H + 1, n);
    Paths<double> d_inc = Paths<double>::Zero(H + 1, n);
    Paths<double> s_inc = Paths<double>::Zero(H + 1, n);
    Paths<double> dv = Paths<double>::Zero(H + 1, n);
    Paths<double> dv_red = Paths<double>::Zero(H + 1, n);
    for (int t = 1; t <= H; ++t)
        for (int a = 0; a < n; ++a) {
            const double ps = b.pS(t, a);
            if (ps > 0.0) {
                q_inc(t, a) = dQ(t, a) / ps;
                s_inc(t, a) = dD(t, a) / ps;
            }
            if (sm(t, a) > 0.0) {
                d_inc(t, a) = -dD(t, a) / sm(t, a);
                dv_red(t, a) = dD(t, a) / sm(t, a);
            }
            if (pair.theta()(a) >= t) {
                require(sm(t, a) > 0.0, "S vanishes before theta");
                dv(t, a) = dD(t, a) / sm(t, a);
            }
        }
    b.Qcal = exp_from_increments(q_inc, ProcessClass::optional);
    b.Dcal = exp_from_increments(d_inc, ProcessClass::predictable);
    b.survival_exp = exp_from_increments(s_inc, ProcessClass::predictable);
    b.v = Process(accumulate(dv), Filt::G, ProcessClass::predictable);
    b.dv_reduced = Process(dv_red, Filt::F, ProcessClass::predictable);
    b.A_dual_opt = dual_projection(space, pair.default_indicator(), Projection::optional, Filt::F);
    b.B = theta_jump_compensator(pair, b.mart_part);
    b.varsigma = first_time(H, n, 0, [&](int t, int a) { return b.S(t, a) == 0.0; });
    b.sigma3 = first_time(H, n, 1, [&](int t, int a) { return b.pS(t, a) == 0.0 && sm(t, a) > 0.0; });
    return b;
}

namespace {

/// For each cell of `cells`, the first member with θ > alive_after, or -1.
std::vector<int> alive_representatives(const EnlargementPair& pair, const Partition& cells, int alive_after) {
    std::vector<int> rep(cells.cells(), -1);
    for (int c = 0; c < cells.cells(); ++c)
        for (int a : cells.members(c))
            if (pair.alive(alive_after, a)) {
                rep[c] = a;
                break;
            }
    return rep;
}

} // namespace

Process reduce(const EnlargementPair& pair, const AzemaBundle& bundle, const Process& L, ReductionKind kind) {
    const auto& space = pair.space();
    require_shape(space, L, "reduce");
    if (kind == ReductionKind::optional)
        require(is_optional(space, L, Filt::G), "reduce: input is not G-optional");
    else
        require(is_predictable(space, L, Filt::G), "reduce: input is not G-predictable");

    const int H = pair.horizon();
    const Weights<double>& w = space.weights();
    Paths<double> lookup = Paths<double>::Zero(H + 1, pair.atoms());
    Paths<double> formula = Paths<double>::Zero(H + 1, pair.atoms());
    for (int t = 0; t <= H; ++t) {
        const int level = (kind == ReductionKind::optional || t == 0) ? t : t - 1;
        const Partition& cells = space.partition(Filt::F, level);
        const auto rep = alive_representatives(pair, cells, level);
        Row<double> jl(pair.atoms());
        for (int a = 0; a < pair.atoms(); ++a)
            jl(a) = pair.alive(level, a) ? L(t, a) : 0.0;
        const Row<double> proj = cond_exp(jl, cells, w);
        for (int c = 0; c < cells.cells(); ++c) {
            if (rep[c] < 0)
                continue;
            for (int a : cells.members(c)) {
                lookup(t, a) = L(t, rep[c]);
                formula(t, a) = proj(a) / bundle.S(level, a);
            }
        }
    }
    const double scale = std::max(1.0, L.values().cwiseAbs().maxCoeff());
    require((lookup - formula).cwiseAbs().maxCoeff() <= 1e-10 * scale,
            "reduce: the two reduction constructions disagree on the uniqueness set");
    return Process(lookup, Filt::F,
                   kind == ReductionKind::optional ? ProcessClass::optional : ProcessClass::predictable);
}

RandomTime reduce_time(const EnlargementPair& pair, const RandomTime& tau) {
    const auto& space = pair.space();
    const RandomTime tg(tau.values(), Filt::G);
    require_stopping_time(space, tg, "tau");
    std::vector<int> rho(pair.atoms(), kNever);
    for (int t = 0; t <= pair.horizon(); ++t) {
        const Partition& cells = space.partition(Filt::F, t);
        const auto rep = alive_representatives(pair, cells, t);
        for (int c = 0; c < cells.cells(); ++c) {
            if (rep[c] < 0 || tau(rep[c]) > t)
                continue;
            for (int a : cells.members(c))
                rho[a] = std::min(rho[a], t);
        }
    }
    RandomTime out(rho, Filt::F);
    for (int a = 0; a < pair.atoms(); ++a) {
        const int th = pair.theta()(a);
        const bool tau_before = tau(a) < th;
        require(tau_before == (rho[a] < th), "reduce_time: {tau < theta} != {rho < theta}");
        require(!tau_before || tau(a) == rho[a], "reduce_time: tau != rho before theta");
    }
    return out;
}

JeulinYor jeulin_yor(const EnlargementPair& pair, const AzemaBundle& bundle, const Process& Qm) {
    const auto& space = pair.space();
    require_shape(space, Qm, "jeulin_yor");
    require(is_optional(space, Qm, Filt::F), "jeulin_yor: Qm is not F-adapted");
    JeulinYor out;
    const Process ratio = survival_ratio(pair, bundle);
    out.angle = angle_bracket(space, bundle.S, Qm, Filt::F, space.weights());
    out.B = theta_jump_compensator(pair, Qm);
    out.compensated_before = stop(Qm, pair.theta(), StopMode::before) - stoch_integral(space, ratio, out.angle);
    out.compensated_at = stop(Qm, pair.theta(), StopMode::at) - stoch_integral(space, ratio, out.angle + out.B);
    return out;
}

namespace {

MartingaleCheck<double> f_premise(const EnlargementPair& pair, const AzemaBundle& bundle, const Process& K,
                                  double tol) {
    const auto& space = pair.space();
    const Process sm(bundle.S_minus(), Filt::F, ProcessClass::predictable);
    const Process x = stoch_integral(space, sm, K) + square_bracket(bundle.S, K);
    const auto window = bundle.S_minus_positive(pair);
    return is_martingale(space, x, Filt::F, tol, &window);
}

} // namespace

InvarianceLemmaCheck invariance_lemma_forward(const EnlargementPair& pair, const AzemaBundle& bundle,
                                              const Process& K, double tol) {
    const auto& space = pair.space();
    require_shape(space, K, "invariance_lemma_forward");
    require(is_optional(space, K, Filt::F), "invariance_lemma_forward: K is not F-adapted");
    InvarianceLemmaCheck out;
    out.premise = f_premise(pair, bundle, K, tol);
    const auto window = pair.until_maturity(Filt::G);
    out.conclusion = is_martingale(space, stop(K, pair.theta(), StopMode::before), Filt::G, tol, &window);
    return out;
}

InvarianceLemmaCheck invariance_lemma_converse(const EnlargementPair& pair, const AzemaBundle& bundle,
                                               const Process& M, double tol) {
    const auto& space = pair.space();
    const auto window = pair.until_maturity(Filt::G);
    InvarianceLemmaCheck out;
    out.conclusion = is_martingale(space, M, Filt::G, tol, &window);
    const Process K = reduce(pair, bundle, M, ReductionKind::optional);
    out.premise = f_premise(pair, bundle, K, tol);
    for (int t = 1; t <= pair.maturity(); ++t)
        for (int a = 0; a < pair.atoms(); ++a)
            if (pair.theta()(a) >= t) {
                const double k = bundle.S(t - 1, a) > 0.0 ? K(t - 1, a) : 0.0;
                out.reduction_gap = std::max(out.reduction_gap, std::abs(M(t - 1, a) - k));
            }
    return out;
}

double jeulin_yor_residual(const EnlargementPair& pair, const AzemaBundle& bundle, const Process& Qm) {
    const auto jy = jeulin_yor(pair, bundle, Qm);
    const auto& space = pair.space();
    return std::max(martingale_residual(space, jy.compensated_before, Filt::G, space.weights()).residual,
                    martingale_residual(space, jy.compensated_at, Filt::G, space.weights()).residual);
}

double AzemaIdentities::max_residual() const {
    return std::max({decomposition, SS, multdec, pS_zero_mart, compensator, S_before_theta > 0.0 ? 0.0 : 1.0});
}

AzemaIdentities azema_identities(const EnlargementPair& pair, const AzemaBundle& b) {
    const auto& space = pair.space();
    const int H = pair.horizon();
    const Paths<double> sm = b.S_minus();
    const Paths<double> dD = increments(b.D.values());
    const Paths<double> dQ = increments(b.mart_part.values());
    AzemaIdentities out;
    out.decomposition =
        (b.S.values() - (b.S.row(0).replicate(H + 1, 1) + b.mart_part.values() - b.D.values())).cwiseAbs().maxCoeff();
    for (int t = 0; t <= H; ++t)
        for (int a = 0; a < pair.atoms(); ++a) {
            if (t >= 1)
                out.SS = std::max(out.SS, std::abs(b.pS(t, a) - (sm(t, a) - dD(t, a))));
            if (b.pS(t, a) > 0.0)
                out.multdec = std::max(out.multdec, std::abs(b.survival_exp(t, a) * b.Dcal(t, a) - 1.0));
            else
                out.pS_zero_mart = std::max(out.pS_zero_mart, std::abs(dQ(t, a)));
        }
    for (int a = 0; a < pair.atoms(); ++a) {
        const int th = pair.theta()(a);
        if (th > 0 && th <= H)
            out.S_before_theta = std::min(out.S_before_theta, b.S(th - 1, a));
    }
    out.compensator =
        martingale_residual(space, pair.default_indicator() - b.v, Filt::G, space.weights()).residual;
    return out;
}

} // namespace filtrationlab
