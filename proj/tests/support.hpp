#pragma once

#include "filtrationlab/lattice.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace testsupport {

using namespace filtrationlab;

struct Rng {
    explicit Rng(std::uint64_t seed) : engine(seed) {}
    double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(engine() % static_cast<std::uint64_t>(hi - lo + 1)); }
    std::mt19937_64 engine;
};

/// Random tree for F; atoms are (F-path, label) and G additionally learns the label at a
/// label-specific time. No default time is involved.
inline FiniteFilteredSpace random_space(std::uint64_t seed, int horizon, int max_branch, int labels) {
    Rng rng(seed);
    std::vector<std::vector<int>> paths{{}};
    std::vector<double> path_mass{1.0};
    for (int t = 1; t <= horizon; ++t) {
        std::vector<std::vector<int>> next;
        std::vector<double> next_mass;
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const int k = rng.integer(1, max_branch);
            std::vector<double> p(k);
            double total = 0;
            for (auto& x : p)
                total += (x = rng.uniform(0.2, 1.0));
            for (int j = 0; j < k; ++j) {
                auto path = paths[i];
                path.push_back(j);
                next.push_back(path);
                next_mass.push_back(path_mass[i] * p[j] / total);
            }
        }
        paths = std::move(next);
        path_mass = std::move(next_mass);
    }
    std::vector<int> reveal(labels);
    for (auto& r : reveal)
        r = rng.integer(0, horizon + 1);
    const int n = static_cast<int>(paths.size()) * labels;
    Eigen::VectorXd w(n);
    std::vector<Partition> F, G;
    for (int t = 0; t <= horizon; ++t) {
        std::vector<std::vector<int>> fk, gk;
        for (std::size_t i = 0; i < paths.size(); ++i)
            for (int l = 0; l < labels; ++l) {
                std::vector<int> key(paths[i].begin(), paths[i].begin() + t);
                fk.push_back(key);
                key.push_back(t >= reveal[l] ? l : -1);
                gk.push_back(key);
            }
        F.push_back(Partition::from_keys(fk));
        G.push_back(Partition::from_keys(gk));
    }
    int a = 0;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        std::vector<double> p(labels);
        double total = 0;
        for (auto& x : p)
            total += (x = rng.uniform(0.2, 1.0));
        for (int l = 0; l < labels; ++l)
            w(a++) = path_mass[i] * p[l] / total;
    }
    w /= w.sum();
    return FiniteFilteredSpace(w, Filtration(F), Filtration(G));
}

inline Process random_raw(const FiniteFilteredSpace& space, Rng& rng) {
    Paths<double> v(space.horizon() + 1, space.atoms());
    for (int t = 0; t <= space.horizon(); ++t)
        for (int a = 0; a < space.atoms(); ++a)
            v(t, a) = rng.uniform(-1.0, 1.0);
    return Process(v, Filt::G, ProcessClass::raw);
}

/// Random values constant on the cells at `level(t)`.
template <class Level>
Process random_measurable(const FiniteFilteredSpace& space, Filt tag, Rng& rng, Level level, ProcessClass cls) {
    Paths<double> v(space.horizon() + 1, space.atoms());
    for (int t = 0; t <= space.horizon(); ++t) {
        const Partition& cells = space.partition(tag, level(t));
        for (int c = 0; c < cells.cells(); ++c) {
            const double x = rng.uniform(-1.0, 1.0);
            for (int a : cells.members(c))
                v(t, a) = x;
        }
    }
    return Process(v, tag, cls);
}

inline Process random_adapted(const FiniteFilteredSpace& space, Filt tag, Rng& rng) {
    return random_measurable(space, tag, rng, [](int t) { return t; }, ProcessClass::optional);
}

inline Process random_predictable(const FiniteFilteredSpace& space, Filt tag, Rng& rng) {
    return random_measurable(space, tag, rng, [](int t) { return t == 0 ? 0 : t - 1; }, ProcessClass::predictable);
}

/// Martingale part of a random adapted process.
inline Process random_martingale(const FiniteFilteredSpace& space, Filt tag, const Weights<double>& w, Rng& rng) {
    auto x = random_adapted(space, tag, rng);
    auto d = doob_decomposition(space, x, tag, w);
    return d.martingale;
}

/// Positive Q-martingale with unit mass, built from bounded random multiplicative increments.
inline Process random_density(const FiniteFilteredSpace& space, Rng& rng, double spread = 0.8) {
    const auto w = space.weights();
    Paths<double> q(space.horizon() + 1, space.atoms());
    q.row(0).setOnes();
    for (int t = 1; t <= space.horizon(); ++t) {
        const Partition& cells = space.partition(Filt::F, t);
        Row<double> h(space.atoms());
        for (int c = 0; c < cells.cells(); ++c) {
            const double x = rng.uniform(-1.0, 1.0);
            for (int a : cells.members(c))
                h(a) = x;
        }
        h -= cond_exp(h, space.partition(Filt::F, t - 1), w);
        const double scale = h.cwiseAbs().maxCoeff();
        if (scale > 0)
            h *= spread / scale;
        q.row(t) = q.row(t - 1).cwiseProduct((h.array() + 1.0).matrix());
    }
    return Process(q, Filt::F, ProcessClass::optional);
}

} // namespace testsupport

namespace testsupport {

/// All 2^horizon coin paths, F = G = natural filtration; atom bits are the tosses (bit t-1 = toss t, 1 = head).
inline FiniteFilteredSpace coin_space(int horizon, double p_head) {
    const int n = 1 << horizon;
    Eigen::VectorXd w(n);
    std::vector<Partition> levels;
    for (int t = 0; t <= horizon; ++t) {
        std::vector<int> labels(n);
        for (int a = 0; a < n; ++a)
            labels[a] = a & ((1 << t) - 1);
        levels.push_back(Partition(labels));
    }
    for (int a = 0; a < n; ++a) {
        double m = 1.0;
        for (int t = 0; t < horizon; ++t)
            m *= (a >> t) & 1 ? p_head : 1.0 - p_head;
        w(a) = m;
    }
    return FiniteFilteredSpace(w, Filtration(levels), Filtration(levels));
}

inline RandomTime first_head(int horizon, Filt tag) {
    std::vector<int> v(1 << horizon, kNever);
    for (int a = 0; a < (1 << horizon); ++a)
        for (int t = 1; t <= horizon; ++t)
            if ((a >> (t - 1)) & 1) {
                v[a] = t;
                break;
            }
    return RandomTime(v, tag);
}

} // namespace testsupport

#include "filtrationlab/scenarios.hpp"

namespace testsupport {

/// Random G stopping time: every G_t cell not yet stopped stops at t with probability `rate`.
inline RandomTime random_stopping_time(const FiniteFilteredSpace& space, Filt tag, Rng& rng, double rate = 0.3) {
    std::vector<int> v(space.atoms(), kNever);
    for (int t = 0; t <= space.horizon(); ++t) {
        const Partition& cells = space.partition(tag, t);
        for (int c = 0; c < cells.cells(); ++c) {
            const int a0 = cells.members(c).front();
            if (v[a0] != kNever || rng.uniform() >= rate)
                continue;
            for (int a : cells.members(c))
                v[a] = t;
        }
    }
    return RandomTime(v, tag);
}

inline ScenarioDescriptor random_descriptor(std::uint64_t seed, int max_horizon = 5, int max_atoms = 192) {
    Rng rng(seed * 7919 + 17);
    ScenarioDescriptor d;
    d.kind = ScenarioKind::random;
    d.seed = seed;
    d.horizon = rng.integer(1, max_horizon);
    d.max_branching = rng.integer(1, 3);
    d.labels = rng.integer(1, 3);
    d.zero_mode = static_cast<ZeroMode>(rng.integer(0, 3));
    d.signal_probability = 0.2;
    d.max_atoms = max_atoms;
    return d;
}

/// Hand-built scenarios plus a coin-driven Cox and the common-shock model.
inline std::vector<Scenario> named_scenarios() {
    std::vector<Scenario> out;
    ScenarioDescriptor d;
    d.kind = ScenarioKind::cox;
    out.push_back(generate(d, "cox"));
    d.lambda_high = 0.3;
    out.push_back(generate(d, "cox_coin"));
    d = {};
    d.kind = ScenarioKind::mixture_ex41;
    d.horizon = 3;
    out.push_back(generate(d, "ex41"));
    d.kind = ScenarioKind::mixture_ex42;
    out.push_back(generate(d, "ex42"));
    d = {};
    d.kind = ScenarioKind::own_filtration_exponential;
    out.push_back(generate(d, "own_trivial"));
    d.f_trivial = false;
    out.push_back(generate(d, "own_fg"));
    d = {};
    d.kind = ScenarioKind::fg_equal_inaccessible;
    d.horizon = 3;
    out.push_back(generate(d, "fg_equal"));
    d = {};
    d.kind = ScenarioKind::common_shock;
    d.horizon = 3;
    out.push_back(generate(d, "common_shock"));
    return out;
}

/// Named scenarios followed by `count` random ones.
inline std::vector<Scenario> scenario_family(int count, std::uint64_t seed0 = 1, int max_horizon = 5) {
    auto out = named_scenarios();
    for (int i = 0; i < count; ++i)
        out.push_back(generate(random_descriptor(seed0 + i, max_horizon), "random" + std::to_string(seed0 + i)));
    return out;
}

/// base·𝓔(h) for a random h whose increments live on the nodes selected by `where`, t ≤ T, and are
/// centred under base·P, so the product stays a P-martingale.
inline Process perturb(const EnlargementPair& pair, const Process& base, Rng& rng, double spread,
                const std::function<bool(int, int)>& where) {
    const auto& space = pair.space();
    const auto& w = space.weights();
    const int T = pair.maturity();
    Paths<double> q(pair.horizon() + 1, pair.atoms());
    q.row(0).setOnes();
    for (int t = 1; t <= pair.horizon(); ++t) {
        if (t > T) {
            q.row(t) = q.row(t - 1);
            continue;
        }
        const Partition& cells = space.partition(Filt::F, t);
        Row<double> h(pair.atoms());
        for (int c = 0; c < cells.cells(); ++c) {
            const double x = rng.uniform(-1.0, 1.0);
            for (int a : cells.members(c))
                h(a) = x;
        }
        for (int a = 0; a < pair.atoms(); ++a)
            if (!where(t, a))
                h(a) = 0.0;
        const Eigen::VectorXd wq = w.cwiseProduct(base.row(t).transpose());
        Row<double> mean = cond_exp(h, space.partition(Filt::F, t - 1), wq);
        for (int a = 0; a < pair.atoms(); ++a)
            if (where(t, a))
                h(a) -= mean(a);
        const double scale = h.cwiseAbs().maxCoeff();
        if (scale > 0)
            h *= spread / scale;
        q.row(t) = q.row(t - 1).cwiseProduct((h.array() + 1.0).matrix());
    }
    return base * Process(q, Filt::F, ProcessClass::optional);
}

} // namespace testsupport
