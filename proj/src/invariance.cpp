#include "filtrationlab/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace filtrationlab {

const char* to_string(Verdict v) { return v == Verdict::invariant ? "invariant" : "not_invariant"; }

const char* to_string(FailedClause c) {
    switch (c) {
    case FailedClause::none: return "none";
    case FailedClause::positivity: return "positivity";
    case FailedClause::true_martingale: return "true_martingale";
    case FailedClause::condition_B: return "condition_B";
    case FailedClause::direct_check: return "direct_check";
    }
    return "?";
}

CandidateDensity candidate_density(const EnlargementPair& pair, const AzemaBundle& bundle) {
    const int T = pair.maturity();
    Paths<double> q = bundle.Qcal.values();
    for (int t = T + 1; t <= pair.horizon(); ++t)
        q.row(t) = q.row(T);
    CandidateDensity c;
    c.q = Process(q, Filt::F, ProcessClass::optional);
    c.positive = (q.array() > 0.0).all();
    c.mass_defect = std::abs(q.row(T).dot(pair.space().weights().transpose()) - 1.0);
    c.density = DensityPair::from_density(pair.space(), c.q);
    return c;
}

PositivityCheck positivity_check(const EnlargementPair& pair, const AzemaBundle& bundle) {
    const int T = pair.maturity();
    PositivityCheck out;
    out.exp_positive = (bundle.Qcal.values().topRows(T + 1).array() > 0.0).all();
    out.pS_zero_at_varsigma = true;
    std::vector<int> restricted(pair.atoms(), kNever);
    for (int a = 0; a < pair.atoms(); ++a) {
        const int z = bundle.varsigma(a);
        if (z > T)
            continue;
        restricted[a] = z;
        if (bundle.pS(z, a) != 0.0)
            out.pS_zero_at_varsigma = false;
    }
    out.varsigma_restricted = RandomTime(restricted, Filt::F);
    out.varsigma_predictable = is_predictable_time(pair.space(), out.varsigma_restricted);
    return out;
}

TrueMartingaleCheck true_martingale_check(const EnlargementPair& pair, const AzemaBundle& bundle, double tol) {
    const int T = pair.maturity();
    const auto& w = pair.space().weights();
    const auto& E = bundle.survival_exp;
    TrueMartingaleCheck out;
    double lhs = 0.0, rhs = 0.0, bound = 0.0, emax = 1.0;
    for (int a = 0; a < pair.atoms(); ++a) {
        lhs += w(a) * bundle.S(0, a) * bundle.Qcal(T, a);
        rhs += w(a) * bundle.S(0, a);
        bound += w(a) * E(std::min(pair.theta()(a), T), a);
        for (int t = 0; t <= T; ++t)
            emax = std::max(emax, E(t, a));
    }
    out.E_identity_gap = std::abs(lhs - rhs);
    out.E_identity_holds = out.E_identity_gap <= tol;
    out.sfcnd_bound = bound;

    constexpr int kMaxLevels = 100000;
    const int levels = static_cast<int>(std::min<double>(std::floor(emax) + 1.0, kMaxLevels));
    for (int n = 1; n <= levels; ++n) {
        std::vector<int> sigma(pair.atoms(), T);
        double sup = 0.0, residual = 0.0;
        for (int a = 0; a < pair.atoms(); ++a) {
            for (int t = 0; t <= T; ++t)
                if (E(t, a) >= n) {
                    sigma[a] = t;
                    break;
                }
            const double e = E(sigma[a], a);
            sup = std::max(sup, e);
            residual += w(a) * (bundle.D(T, a) - bundle.D(sigma[a], a)) * e;
        }
        if (!out.ncsfcnd_residuals.empty() && residual > out.ncsfcnd_residuals.back() + tol)
            out.residuals_monotone = false;
        out.sigma_n.emplace_back(sigma, Filt::F);
        out.sigma_n_bound.push_back(sup);
        out.ncsfcnd_residuals.push_back(residual);
    }
    out.residuals_vanish = std::abs(out.ncsfcnd_residuals.back()) <= tol;
    return out;
}

namespace {

/// Cell-mass form of the spanning test. For a parent c at t−1 with surviving mass M₀(c) > 0 and
/// children f, the one-jump martingale 1_f − P(f|c) stopped before θ has G-drift
/// (m(f) − P(f|c)Σm)/M₀(c), with m(f) the Q-mass of f ∩ {θ > t}.
ConditionACheck condition_A_by_masses(const EnlargementPair& pair, const DensityPair& d, SpanningMode mode) {
    const auto& space = pair.space();
    const auto& w = space.weights();
    const auto& pw = d.p_weights();
    const int T = pair.maturity();
    const Partition& terminal = space.partition(Filt::F, T);
    std::vector<double> terminal_p(terminal.cells(), 0.0);
    for (int a = 0; a < pair.atoms(); ++a)
        terminal_p[terminal.cell_of(a)] += pw(a);

    ConditionACheck out;
    for (int t = 1; t <= T; ++t) {
        const Partition& parent = space.partition(Filt::F, t - 1);
        const Partition& child = space.partition(Filt::F, t);
        std::vector<double> alive_prev(parent.cells(), 0.0), p_parent(parent.cells(), 0.0), m_parent(parent.cells(), 0.0);
        std::vector<double> m(child.cells(), 0.0), p_child(child.cells(), 0.0), largest_e(child.cells(), 0.0);
        std::vector<int> parent_of(child.cells(), -1);
        for (int a = 0; a < pair.atoms(); ++a) {
            const int c = parent.cell_of(a), f = child.cell_of(a);
            parent_of[f] = c;
            if (pair.alive(t - 1, a))
                alive_prev[c] += w(a);
            if (pair.alive(t, a)) {
                m[f] += w(a);
                m_parent[c] += w(a);
            }
            p_child[f] += pw(a);
            p_parent[c] += pw(a);
        }
        if (mode == SpanningMode::full)
            for (int a = 0; a < pair.atoms(); ++a) {
                const int f = child.cell_of(a);
                largest_e[f] = std::max(largest_e[f], terminal_p[terminal.cell_of(a)]);
            }
        for (int f = 0; f < child.cells(); ++f) {
            const int c = parent_of[f];
            if (alive_prev[c] <= 0.0)
                continue;
            double r = std::abs(m[f] - p_child[f] / p_parent[c] * m_parent[c]) / alive_prev[c];
            if (mode == SpanningMode::full)
                r *= largest_e[f] / p_child[f];
            if (r > out.residual) {
                out.residual = r;
                out.worst_t = t;
                out.worst_atom = child.members(f).front();
            }
        }
    }
    return out;
}

} // namespace

ConditionACheck verify_condition_A(const EnlargementPair& pair, const DensityPair& d, SpanningMode mode, double tol) {
    if (!d.equivalent()) {
        ConditionACheck out;
        out.residual = std::numeric_limits<double>::infinity();
        out.clause = FailedClause::positivity;
        return out;
    }
    auto out = condition_A_by_masses(pair, d, mode);
    out.holds = out.residual <= tol;
    if (!out.holds)
        out.clause = FailedClause::direct_check;
    return out;
}

ConditionACheck verify_condition_A_brute_force(const EnlargementPair& pair, const DensityPair& d, SpanningMode mode,
                                               double tol) {
    ConditionACheck out;
    if (!d.equivalent()) {
        out.residual = std::numeric_limits<double>::infinity();
        out.clause = FailedClause::positivity;
        return out;
    }
    const auto& space = pair.space();
    const int T = pair.maturity();
    const auto window = pair.until_maturity(Filt::G);
    const auto consider = [&](const Process& N) {
        const auto check = is_martingale(space, stop(N, pair.theta(), StopMode::before), Filt::G, space.weights(), tol,
                                         &window);
        if (check.residual > out.residual) {
            out.residual = check.residual;
            out.worst_t = check.worst_t;
            out.worst_atom = check.worst_atom;
        }
    };
    if (mode == SpanningMode::full) {
        for (const auto& N : terminal_cell_martingales(space, Filt::F, d.p_weights(), T))
            consider(N);
    } else {
        for (const auto& e : elementary_martingales(space, Filt::F, T))
            consider(materialize(space, Filt::F, d.p_weights(), e));
    }
    out.holds = out.residual <= tol;
    if (!out.holds)
        out.clause = FailedClause::direct_check;
    return out;
}

Part1Equivalence theorem_part1_equivalence(const EnlargementPair& pair, const AzemaBundle& bundle,
                                           const DensityPair& d, double tol) {
    require(d.equivalent(), "theorem_part1_equivalence: density is not equivalent");
    const int T = pair.maturity();
    Part1Equivalence out;
    const auto direct = verify_condition_A(pair, d, SpanningMode::full, tol);
    out.direct = direct.holds;
    out.direct_residual = direct.residual;

    const auto& q = d.q();
    const Paths<double> dQ = increments(bundle.mart_part.values());
    const Paths<double> dqbar = increments(d.q_bar().values());
    for (int t = 1; t <= T; ++t)
        for (int a = 0; a < pair.atoms(); ++a) {
            const double ps = bundle.pS(t, a);
            if (ps > 0.0)
                out.qf_residual =
                    std::max(out.qf_residual, std::abs(q(t, a) - q(t - 1, a) * (1.0 + dQ(t, a) / ps)));
            out.cor_residual = std::max(out.cor_residual, std::abs(ps * dqbar(t, a) - dQ(t, a)));
        }
    out.qf = out.qf_residual <= tol;
    out.cor = out.cor_residual <= tol;
    if (out.direct && out.qf && out.cor) {
        double gap = 0.0;
        for (int a = 0; a < pair.atoms(); ++a) {
            double extra = 1.0;
            for (int t = 1; t <= T; ++t)
                if (bundle.pS(t, a) == 0.0)
                    extra *= 1.0 + dqbar(t, a);
            gap = std::max(gap, std::abs(q(T, a) - q(0, a) * bundle.Qcal(T, a) * extra));
        }
        out.yf_gap = gap;
    }
    return out;
}

PCharacterization p_martingale_characterization(const EnlargementPair& pair, const AzemaBundle& bundle,
                                                const DensityPair& d, const Process& P, double tol) {
    const auto& space = pair.space();
    require(d.equivalent(), "p_martingale_characterization: density is not equivalent");
    require(is_optional(space, P, Filt::F), "p_martingale_characterization: P is not F-adapted");
    const auto window = bundle.pS_positive(pair);
    PCharacterization out;
    out.p_side = is_martingale(space, P, Filt::F, d.p_weights(), tol, &window);
    const Process x = stoch_integral(space, bundle.pS, P) + square_bracket(bundle.mart_part, P);
    out.q_side = is_martingale(space, x, Filt::F, space.weights(), tol, &window);
    return out;
}

PseudoStoppingCheck pseudo_stopping_check(const EnlargementPair& pair, const AzemaBundle& bundle, double tol) {
    const int H = pair.horizon();
    const auto& w = pair.space().weights();
    PseudoStoppingCheck out;
    out.A_inf_equals_1 = true;
    for (int a = 0; a < pair.atoms(); ++a)
        if (std::abs(bundle.A_dual_opt(H, a) - 1.0) > tol) {
            out.A_inf_equals_1 = false;
            out.mass_A_inf_not_1 += w(a);
        }
    out.Q_mart_zero = bundle.mart_part.values().cwiseAbs().maxCoeff() <= tol;
    out.A_minus_D = bundle.A_dual_opt - bundle.D;
    return out;
}

DriftCancellation drift_cancellation_check(const EnlargementPair& pair, const AzemaBundle& bundle,
                                           const DensityPair& d) {
    require(d.equivalent(), "drift_cancellation_check: density is not equivalent");
    const auto& space = pair.space();
    const auto& w = space.weights();
    const Process J = pair.survival_indicator();
    const Process Jq = J * d.q();
    const Process Sq = bundle.S * d.q();
    const Process ratio = survival_ratio(pair, bundle);
    const auto g_window = pair.until_maturity(Filt::G);
    const auto f_window = bundle.S_minus_positive(pair);
    DriftCancellation out;
    for (const auto& e : elementary_martingales(space, Filt::F, pair.maturity())) {
        const Process P = materialize(space, Filt::F, d.p_weights(), e);
        const Process pP = square_bracket(d.p(), P);
        const Process Y = P - stieltjes(d.q(), pP);
        const Process g = stieltjes(Jq, pP) + stoch_integral(space, ratio, angle_bracket(space, bundle.mart_part, Y, Filt::F, w));
        const Process f = stieltjes(Sq, pP) + square_bracket(bundle.mart_part, Y);
        out.g_residual = std::max(out.g_residual, martingale_residual(space, g, Filt::G, w, &g_window).residual);
        out.f_residual = std::max(out.f_residual, martingale_residual(space, f, Filt::F, w, &f_window).residual);
        ++out.martingales;
    }
    return out;
}

SurvivalBridge survival_measure_bridge(const EnlargementPair& pair, const AzemaBundle& bundle, double tol) {
    const auto& space = pair.space();
    const int T = pair.maturity();
    const Process X = bundle.survival_exp * pair.survival_indicator();
    const Process proj = project(space, X, Projection::optional, Filt::F);
    SurvivalBridge out;
    for (int t = 0; t <= pair.horizon(); ++t)
        for (int a = 0; a < pair.atoms(); ++a) {
            const double target = bundle.pS(t, a) > 0.0 ? bundle.S(0, a) * bundle.Qcal(t, a) : 0.0;
            out.projection_gap = std::max(out.projection_gap, std::abs(proj(t, a) - target));
        }
    const auto window = PredictableSet::from_mask(space, Filt::G, bundle.pS_positive(pair).mask());
    out.martingale = is_martingale(space, X, Filt::G, space.weights(), tol, &window);

    bool theta_positive = true, survives = true;
    for (int a = 0; a < pair.atoms(); ++a) {
        theta_positive = theta_positive && pair.theta()(a) > 0;
        survives = survives && bundle.S(T, a) > 0.0;
    }
    out.restriction_applicable = theta_positive && survives;
    if (out.restriction_applicable) {
        Row<double> z = X.row(T);
        z /= z.dot(space.weights().transpose());
        const Row<double> density = cond_exp(z, space.partition(Filt::F, T), space.weights());
        out.restriction_gap = (density - bundle.Qcal.row(T)).cwiseAbs().maxCoeff();
    }
    return out;
}

InvarianceReport decide(const EnlargementPair& pair, const AzemaBundle& bundle, double tol) {
    InvarianceReport r;
    r.note = "finite space: nonnegative local martingales are true martingales, so the true-martingale clause "
             "cannot be the binding failure here";
    const auto cand = candidate_density(pair, bundle);
    r.positivity = positivity_check(pair, bundle);
    require(r.positivity.agree(), "positivity characterizations disagree");
    r.true_martingale = true_martingale_check(pair, bundle);
    r.pseudo_stopping = pseudo_stopping_check(pair, bundle);
    r.residuals["candidate_mass"] = cand.mass_defect;
    r.residuals["E_identity"] = r.true_martingale.E_identity_gap;

    if (!r.positivity.holds()) {
        r.failed_clause = FailedClause::positivity;
        return r;
    }
    if (!r.true_martingale.E_identity_holds) {
        r.failed_clause = FailedClause::true_martingale;
        return r;
    }
    const auto full = verify_condition_A(pair, cand.density, SpanningMode::full, tol);
    const auto bounded = verify_condition_A(pair, cand.density, SpanningMode::bounded_only, tol);
    require(full.holds == bounded.holds, "full and bounded-only spanning families disagree");
    r.residuals["direct_check"] = full.residual;
    r.residuals["direct_check_bounded"] = bounded.residual;
    if (!full.holds) {
        r.failed_clause = FailedClause::direct_check;
        return r;
    }
    const auto part1 = theorem_part1_equivalence(pair, bundle, cand.density, tol);
    require(part1.agree(), "direct, qf and cor characterizations disagree");
    r.residuals["qf"] = part1.qf_residual;
    r.residuals["cor"] = part1.cor_residual;
    r.residuals["drift_cancellation"] = drift_cancellation_check(pair, bundle, cand.density).residual();
    r.verdict = Verdict::invariant;
    r.witness = cand.density;
    return r;
}

} // namespace filtrationlab
