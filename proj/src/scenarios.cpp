#include "filtrationlab/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>

namespace filtrationlab {

namespace {

using Key = std::vector<long long>;

struct Rng {
    explicit Rng(std::uint64_t seed) : engine(seed) {}
    double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(engine() % static_cast<std::uint64_t>(hi - lo + 1)); }
    std::mt19937_64 engine;
};

struct Draft {
    int horizon = 0;
    std::vector<double> weights;
    std::vector<int> theta;
    std::vector<std::string> ids;
};

void check_limits(const Draft& d, const ScenarioLimits& limits) {
    require(d.horizon >= 1 && d.horizon <= limits.max_horizon,
            "scenario horizon " + std::to_string(d.horizon) + " outside [1, " + std::to_string(limits.max_horizon) + "]");
    require(static_cast<int>(d.weights.size()) <= limits.max_atoms,
            "scenario has " + std::to_string(d.weights.size()) + " atoms, limit " + std::to_string(limits.max_atoms));
    for (double w : d.weights)
        require(w > 0.0, "parameters produce a zero-probability atom");
}

template <class FKey, class GKey>
FiniteFilteredSpace build(const Draft& d, FKey fkey, GKey gkey) {
    const int n = static_cast<int>(d.weights.size());
    std::vector<Partition> F, G;
    for (int t = 0; t <= d.horizon; ++t) {
        std::vector<Key> fk(n), gk(n);
        for (int a = 0; a < n; ++a) {
            fk[a] = fkey(a, t);
            gk[a] = fk[a];
            const Key extra = gkey(a, t);
            gk[a].push_back(-7);
            gk[a].insert(gk[a].end(), extra.begin(), extra.end());
        }
        F.push_back(Partition::from_keys(fk));
        G.push_back(Partition::from_keys(gk));
    }
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(d.weights.data(), n);
    return FiniteFilteredSpace(w / w.sum(), Filtration(F), Filtration(G), d.ids);
}

/// G = F ∨ natural filtration of 1_{[θ,∞)}.
auto progressive(const Draft& d) {
    return [&d](int a, int t) { return Key{d.theta[a] <= t ? d.theta[a] : -1}; };
}

void check_probability(double p, const char* what) {
    require(p > 0.0 && p < 1.0, std::string(what) + " must lie in (0, 1)");
}

std::string time_label(int t) { return t == kNever ? "inf" : std::to_string(t); }

std::string coin_label(int path, int tosses) {
    std::string s;
    for (int t = 0; t < tosses; ++t)
        s += (path >> t) & 1 ? 'H' : 'T';
    return s;
}

double coin_mass(int path, int tosses, double p) {
    double m = 1.0;
    for (int t = 0; t < tosses; ++t)
        m *= (path >> t) & 1 ? p : 1.0 - p;
    return m;
}

Key coin_prefix(int path, int t) { return Key{path & ((1LL << t) - 1)}; }

/// Geometric default times 1..T with per-step hazards; the last entry is kNever.
std::vector<std::pair<int, double>> geometric(int T, const std::function<double(int)>& hazard) {
    std::vector<std::pair<int, double>> out;
    double survive = 1.0;
    for (int t = 1; t <= T; ++t) {
        out.emplace_back(t, survive * hazard(t));
        survive *= 1.0 - hazard(t);
    }
    out.emplace_back(kNever, survive);
    return out;
}

Scenario finish(const ScenarioDescriptor& desc, const std::string& id, FiniteFilteredSpace space, const Draft& d,
                int maturity) {
    Scenario s;
    s.id = id.empty() ? std::string(to_string(desc.kind)) : id;
    s.descriptor = desc;
    s.pair = EnlargementPair(std::move(space), RandomTime(d.theta, Filt::G), maturity);
    return s;
}

Scenario make_cox(const ScenarioDescriptor& desc, const std::string& id, const ScenarioLimits& limits) {
    const int T = desc.horizon;
    check_probability(desc.lambda, "cox lambda");
    const bool coin = desc.lambda_high > 0.0;
    if (coin) {
        check_probability(desc.lambda_high, "cox lambda_high");
        check_probability(desc.coin_p, "coin_p");
    }
    require(T >= 1 && T <= limits.max_horizon, "cox horizon out of range");
    const int paths = coin ? 1 << T : 1;
    Draft d;
    d.horizon = T;
    std::vector<int> path_of;
    for (int p = 0; p < paths; ++p) {
        const auto hazard = [&](int t) {
            return (coin && t >= 2 && ((p >> (t - 2)) & 1)) ? desc.lambda_high : desc.lambda;
        };
        const double pm = coin ? coin_mass(p, T, desc.coin_p) : 1.0;
        for (auto [th, m] : geometric(T, hazard)) {
            d.weights.push_back(pm * m);
            d.theta.push_back(th);
            d.ids.push_back((coin ? coin_label(p, T) + "|" : std::string()) + "theta=" + time_label(th));
            path_of.push_back(p);
        }
    }
    check_limits(d, limits);
    auto space = build(d, [&](int a, int t) { return coin ? coin_prefix(path_of[a], t) : Key{}; }, progressive(d));
    Scenario s = finish(desc, id, std::move(space), d, T);
    s.expected.invariant = true;
    s.expected.reference_is_invariance_measure = true;
    return s;
}

/// Coin tree with T+1 tosses; atoms are (path, branch) and θ = sigma[branch](path).
Scenario make_mixture(const ScenarioDescriptor& desc, const std::string& id, const ScenarioLimits& limits,
                      const std::vector<double>& branch_mass,
                      const std::vector<std::function<int(int)>>& branch_time) {
    const int T = desc.horizon;
    const int H = T + 1;
    check_probability(desc.coin_p, "coin_p");
    require(T >= 1 && T <= limits.max_horizon, "mixture horizon out of range");
    Draft d;
    d.horizon = H;
    std::vector<int> path_of;
    for (int p = 0; p < (1 << H); ++p)
        for (std::size_t b = 0; b < branch_mass.size(); ++b) {
            d.weights.push_back(coin_mass(p, H, desc.coin_p) * branch_mass[b]);
            d.theta.push_back(branch_time[b](p));
            d.ids.push_back(coin_label(p, H) + "|A" + std::to_string(b + 1));
            path_of.push_back(p);
        }
    check_limits(d, limits);
    auto space = build(d, [&](int a, int t) { return coin_prefix(path_of[a], t); }, progressive(d));
    return finish(desc, id, std::move(space), d, T);
}

int first_head_capped(int path, int H) {
    for (int t = 1; t <= H; ++t)
        if ((path >> (t - 1)) & 1)
            return t;
    return H;
}

Scenario make_ex41(const ScenarioDescriptor& desc, const std::string& id, const ScenarioLimits& limits) {
    check_probability(desc.alpha, "alpha");
    const int H = desc.horizon + 1;
    Scenario s = make_mixture(desc, id, limits, {desc.alpha, 1.0 - desc.alpha},
                              {[H](int p) { return first_head_capped(p, H); }, [H](int) { return H; }});
    s.expected.invariant = true;
    s.expected.pseudo_stopping = true;
    return s;
}

/// max(1, last time the ±1 walk driven by the coin sits at its running maximum over 0..H).
int last_argmax(int path, int H) {
    int x = 0, best = 0, arg = 0;
    for (int t = 1; t <= H; ++t) {
        x += (path >> (t - 1)) & 1 ? 1 : -1;
        if (x >= best) {
            best = x;
            arg = t;
        }
    }
    return std::max(1, arg);
}

Scenario make_ex42(const ScenarioDescriptor& desc, const std::string& id, const ScenarioLimits& limits) {
    const auto& al = desc.alphas;
    for (double a : al)
        check_probability(a, "alphas");
    require(std::abs(al[0] + al[1] + al[2] - 1.0) <= 1e-12, "alphas must sum to 1");
    const int H = desc.horizon + 1;
    Scenario s = make_mixture(desc, id, limits, {al[0], al[1], al[2]},
                              {[H](int p) { return first_head_capped(p, H); }, [H](int) { return H; },
                               [H](int p) { return last_argmax(p, H); }});
    s.expected.invariant = true;
    s.expected.pseudo_stopping = false;
    return s;
}

Scenario make_own_exponential(const ScenarioDescriptor& desc, const std::string& id, const ScenarioLimits& limits) {
    const int T = desc.horizon;
    check_probability(desc.lambda, "lambda");
    require(T >= 1 && T <= limits.max_horizon, "horizon out of range");
    Draft d;
    d.horizon = T;
    for (auto [th, m] : geometric(T, [&](int) { return desc.lambda; })) {
        d.weights.push_back(m);
        d.theta.push_back(th);
        d.ids.push_back("theta=" + time_label(th));
    }
    check_limits(d, limits);
    const bool trivial = desc.f_trivial;
    auto space = build(
        d,
        [&](int a, int t) { return trivial ? Key{} : Key{d.theta[a] <= t ? d.theta[a] : -1}; },
        progressive(d));
    Scenario s = finish(desc, id, std::move(space), d, T);
    s.expected.invariant = trivial;
    if (!trivial)
        s.expected.failed_clause = "positivity";
    return s;
}

Scenario make_fg_equal(const ScenarioDescriptor& desc, const std::string& id, const ScenarioLimits& limits) {
    const int T = desc.horizon;
    check_probability(desc.coin_p, "coin_p");
    require(T >= 1 && T <= limits.max_horizon, "horizon out of range");
    Draft d;
    d.horizon = T;
    for (int p = 0; p < (1 << T); ++p) {
        int th = kNever;
        for (int t = 1; t <= T && th == kNever; ++t)
            if ((p >> (t - 1)) & 1)
                th = t;
        d.weights.push_back(coin_mass(p, T, desc.coin_p));
        d.theta.push_back(th);
        d.ids.push_back(coin_label(p, T));
    }
    check_limits(d, limits);
    auto space = build(d, [&](int a, int t) { return coin_prefix(a, t); }, [](int, int) { return Key{}; });
    Scenario s = finish(desc, id, std::move(space), d, T);
    s.expected.invariant = false;
    s.expected.failed_clause = "positivity";
    return s;
}

Scenario make_common_shock(const ScenarioDescriptor& desc, const std::string& id, const ScenarioLimits& limits) {
    const int T = desc.horizon;
    for (double h : desc.shock_hazards)
        check_probability(h, "shock_hazards");
    require(T >= 1 && T <= limits.max_horizon, "horizon out of range");
    std::array<std::vector<std::pair<int, double>>, 3> shock;
    for (int i = 0; i < 3; ++i)
        shock[i] = geometric(T, [&](int) { return desc.shock_hazards[i]; });
    Draft d;
    d.horizon = T;
    std::vector<std::array<int, 3>> times;
    for (auto [t0, m0] : shock[0])
        for (auto [t1, m1] : shock[1])
            for (auto [tc, mc] : shock[2]) {
                d.weights.push_back(m0 * m1 * mc);
                d.theta.push_back(std::min(t0, tc));
                d.ids.push_back("tau0=" + time_label(t0) + "|tau1=" + time_label(t1) + "|tau01=" + time_label(tc));
                times.push_back({t0, t1, tc});
            }
    check_limits(d, limits);
    const auto seen = [](int x, int t) { return static_cast<long long>(x <= t ? x : -1); };
    auto space = build(
        d, [&](int a, int t) { return Key{seen(times[a][1], t)}; },
        [&](int a, int t) { return Key{seen(times[a][0], t), seen(times[a][2], t)}; });
    Scenario s = finish(desc, id, std::move(space), d, T);
    s.expected.invariant = true;
    s.expected.reference_is_invariance_measure = true;
    return s;
}

Scenario make_random(const ScenarioDescriptor& desc, const std::string& id, const ScenarioLimits& limits) {
    const int T = desc.horizon;
    const int L = desc.labels;
    require(T >= 1 && T <= limits.max_horizon, "random horizon out of range");
    require(desc.max_branching >= 1 && desc.max_branching <= 8, "max_branching must lie in 1..8");
    require(L >= 1 && L <= 8, "labels must lie in 1..8");
    require(desc.max_atoms >= L && desc.max_atoms <= limits.max_atoms, "max_atoms out of range");
    require(desc.signal_probability >= 0.0 && desc.signal_probability <= 1.0, "signal_probability outside [0, 1]");
    constexpr int kMaxAttempts = 1000;
    Rng rng(desc.seed);
    for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
        // F tree: prefix per leaf, within the atom budget.
        std::vector<std::vector<int>> paths{{}};
        std::vector<double> mass{1.0};
        const int leaf_budget = desc.max_atoms / L;
        for (int t = 1; t <= T; ++t) {
            std::vector<std::vector<int>> next;
            std::vector<double> next_mass;
            for (std::size_t i = 0; i < paths.size(); ++i) {
                const int remaining = static_cast<int>(paths.size() - i - 1);
                int k = rng.integer(1, desc.max_branching);
                k = std::max(1, std::min(k, leaf_budget - static_cast<int>(next.size()) - remaining));
                std::vector<double> p(k);
                double total = 0;
                for (auto& x : p)
                    total += (x = rng.uniform(0.2, 1.0));
                for (int j = 0; j < k; ++j) {
                    auto path = paths[i];
                    path.push_back(j);
                    next.push_back(std::move(path));
                    next_mass.push_back(mass[i] * p[j] / total);
                }
            }
            paths = std::move(next);
            mass = std::move(next_mass);
        }
        Draft d;
        d.horizon = T;
        std::vector<int> path_of, label_of;
        for (std::size_t i = 0; i < paths.size(); ++i) {
            std::vector<double> p(L);
            double total = 0;
            for (auto& x : p)
                total += (x = rng.uniform(0.2, 1.0));
            for (int l = 0; l < L; ++l) {
                const double h = rng.uniform(0.1, 0.5);
                int th = kNever;
                for (int t = 1; t <= T && th == kNever; ++t)
                    if (rng.uniform() < h)
                        th = t;
                d.weights.push_back(mass[i] * p[l] / total);
                d.theta.push_back(th);
                std::string name = "p";
                for (int x : paths[i])
                    name += std::to_string(x);
                d.ids.push_back(name + "|l" + std::to_string(l));
                path_of.push_back(static_cast<int>(i));
                label_of.push_back(l);
            }
        }
        const int n = static_cast<int>(d.weights.size());
        const auto prefix = [&](int a, int t) {
            const auto& p = paths[path_of[a]];
            return Key(p.begin(), p.begin() + t);
        };
        std::vector<std::vector<int>> cell(T + 1);
        for (int t = 0; t <= T; ++t) {
            std::vector<Key> keys(n);
            for (int a = 0; a < n; ++a)
                keys[a] = prefix(a, t);
            cell[t] = Partition::from_keys(keys).labels();
        }

        const bool want_inaccessible =
            desc.zero_mode == ZeroMode::inaccessible || desc.zero_mode == ZeroMode::mixed;
        const bool want_predictable = desc.zero_mode == ZeroMode::predictable || desc.zero_mode == ZeroMode::mixed;
        if (want_inaccessible) {
            // Kill one F_t child of a branching F_{t-1} cell; keep a survivor in a sibling.
            std::vector<std::pair<int, int>> choices;  // (t, atom in the child to kill)
            for (int t = 1; t <= T; ++t) {
                std::map<int, int> first_child;
                for (int a = 0; a < n; ++a)
                    first_child.try_emplace(cell[t - 1][a], cell[t][a]);
                for (int a = 0; a < n; ++a)
                    if (first_child[cell[t - 1][a]] != cell[t][a])
                        choices.emplace_back(t, a);
            }
            if (!choices.empty()) {
                const auto [t, a0] = choices[rng.integer(0, static_cast<int>(choices.size()) - 1)];
                int survivor = -1;
                for (int b = 0; b < n; ++b) {
                    if (cell[t][b] == cell[t][a0])
                        d.theta[b] = std::min(d.theta[b], t);
                    else if (cell[t - 1][b] == cell[t - 1][a0] && survivor < 0)
                        survivor = b;
                }
                d.theta[survivor] = kNever;
            }
        }
        if (want_predictable) {
            // Every atom of a chosen F_{t-1} cell that is still alive defaults at t.
            const int t = rng.integer(1, T);
            const int a0 = rng.integer(0, n - 1);
            for (int b = 0; b < n; ++b)
                if (cell[t - 1][b] == cell[t - 1][a0] && d.theta[b] >= t)
                    d.theta[b] = t;
        }

        std::vector<int> reveal(L);
        for (auto& r : reveal)
            r = rng.integer(0, T + 1);
        const int signal = rng.uniform() < desc.signal_probability ? rng.integer(0, T) : kNever;
        check_limits(d, limits);
        auto space = build(d, prefix, [&](int a, int t) {
            const int th = d.theta[a];
            const bool dead = th <= t;
            const bool label = (dead && t >= reveal[label_of[a]]) || t >= signal;
            return Key{dead ? th : -1, label ? label_of[a] : -1};
        });
        if (!check_condition_B(space, RandomTime(d.theta, Filt::G)).holds)
            continue;
        Scenario s = finish(desc, id, std::move(space), d, T);
        s.attempts = attempt;
        return s;
    }
    throw Error("random scenario: no draw satisfying condition (B) after " + std::to_string(kMaxAttempts) +
                " attempts");
}

} // namespace

const char* to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::cox: return "cox";
    case ScenarioKind::mixture_ex41: return "mixture_ex41";
    case ScenarioKind::mixture_ex42: return "mixture_ex42";
    case ScenarioKind::own_filtration_exponential: return "own_filtration_exponential";
    case ScenarioKind::fg_equal_inaccessible: return "fg_equal_inaccessible";
    case ScenarioKind::common_shock: return "common_shock";
    case ScenarioKind::random: return "random";
    }
    return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
    for (auto k : {ScenarioKind::cox, ScenarioKind::mixture_ex41, ScenarioKind::mixture_ex42,
                   ScenarioKind::own_filtration_exponential, ScenarioKind::fg_equal_inaccessible,
                   ScenarioKind::common_shock, ScenarioKind::random})
        if (name == to_string(k))
            return k;
    throw Error("unknown scenario kind '" + name + "'");
}

const char* to_string(ZeroMode mode) {
    switch (mode) {
    case ZeroMode::none: return "none";
    case ZeroMode::predictable: return "predictable";
    case ZeroMode::inaccessible: return "inaccessible";
    case ZeroMode::mixed: return "mixed";
    }
    return "?";
}

ZeroMode zero_mode_from_string(const std::string& name) {
    for (auto m : {ZeroMode::none, ZeroMode::predictable, ZeroMode::inaccessible, ZeroMode::mixed})
        if (name == to_string(m))
            return m;
    throw Error("unknown zero_mode '" + name + "'");
}

Scenario generate(const ScenarioDescriptor& descriptor, const std::string& id, ScenarioLimits limits) {
    switch (descriptor.kind) {
    case ScenarioKind::cox: return make_cox(descriptor, id, limits);
    case ScenarioKind::mixture_ex41: return make_ex41(descriptor, id, limits);
    case ScenarioKind::mixture_ex42: return make_ex42(descriptor, id, limits);
    case ScenarioKind::own_filtration_exponential: return make_own_exponential(descriptor, id, limits);
    case ScenarioKind::fg_equal_inaccessible: return make_fg_equal(descriptor, id, limits);
    case ScenarioKind::common_shock: return make_common_shock(descriptor, id, limits);
    case ScenarioKind::random: return make_random(descriptor, id, limits);
    }
    throw Error("unknown scenario kind");
}

} // namespace filtrationlab
