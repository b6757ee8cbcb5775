#include "filtrationlab/lattice/space.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace filtrationlab {

Partition::Partition(const std::vector<int>& labels) {
    std::unordered_map<int, int> ids;
    cell_of_.reserve(labels.size());
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
        auto [it, inserted] = ids.try_emplace(labels[i], static_cast<int>(members_.size()));
        if (inserted)
            members_.emplace_back();
        cell_of_.push_back(it->second);
        members_[it->second].push_back(i);
    }
}

Partition Partition::trivial(int atoms) { return Partition(std::vector<int>(atoms, 0)); }

Partition Partition::discrete(int atoms) {
    std::vector<int> labels(atoms);
    for (int i = 0; i < atoms; ++i)
        labels[i] = i;
    return Partition(labels);
}

bool Partition::refines(const Partition& coarser) const {
    if (coarser.atoms() != atoms())
        return false;
    for (const auto& cell : members_)
        for (int a : cell)
            if (coarser.cell_of(a) != coarser.cell_of(cell.front()))
                return false;
    return true;
}

Filtration::Filtration(std::vector<Partition> levels) : levels_(std::move(levels)) {
    require(!levels_.empty(), "filtration needs at least one level");
    for (std::size_t t = 1; t < levels_.size(); ++t) {
        require(levels_[t].atoms() == levels_[0].atoms(), "filtration levels differ in atom count");
        require(levels_[t].refines(levels_[t - 1]),
                "filtration does not refine over time at t=" + std::to_string(t));
    }
}

Filtration Filtration::trivial(int horizon, int atoms) {
    return Filtration(std::vector<Partition>(horizon + 1, Partition::trivial(atoms)));
}

FiniteFilteredSpace::FiniteFilteredSpace(Eigen::VectorXd weights, Filtration F, Filtration G,
                                         std::vector<std::string> atom_ids)
    : weights_(std::move(weights)), F_(std::move(F)), G_(std::move(G)), atom_ids_(std::move(atom_ids)) {
    const int n = static_cast<int>(weights_.size());
    require(n > 0, "space needs at least one atom");
    require(F_.horizon() >= 1, "horizon must be at least 1");
    require(F_.horizon() == G_.horizon(), "F and G horizons differ");
    require(F_.atoms() == n && G_.atoms() == n, "filtration atom count differs from weights");
    for (int a = 0; a < n; ++a)
        require(weights_(a) > 0.0 && std::isfinite(weights_(a)),
                "atom " + std::to_string(a) + " has non-positive weight");
    const double total = weights_.sum();
    require(std::abs(total - 1.0) <= 1e-9, "weights do not sum to 1");
    weights_ /= total;
    for (int t = 0; t <= F_.horizon(); ++t)
        require(G_.at(t).refines(F_.at(t)), "F is not contained in G at t=" + std::to_string(t));
    if (atom_ids_.empty())
        for (int a = 0; a < n; ++a)
            atom_ids_.push_back(std::to_string(a));
    require(static_cast<int>(atom_ids_.size()) == n, "atom id count differs from weights");
}

bool RandomTime::never() const {
    return std::all_of(values_.begin(), values_.end(), [](int v) { return v == kNever; });
}

int RandomTime::max_finite() const {
    int m = -1;
    for (int v : values_)
        if (v != kNever)
            m = std::max(m, v);
    return m;
}

bool is_stopping_time(const FiniteFilteredSpace& space, const RandomTime& tau) {
    if (tau.atoms() != space.atoms())
        return false;
    for (int v : tau.values())
        if (v != kNever && (v < 0 || v > space.horizon()))
            return false;
    for (int t = 0; t <= space.horizon(); ++t)
        if (!space.partition(tau.tag(), t).measurable([&](int a) { return tau(a) <= t; }))
            return false;
    return true;
}

void require_stopping_time(const FiniteFilteredSpace& space, const RandomTime& tau, const char* what) {
    require(is_stopping_time(space, tau),
            std::string(what) + " is not a " + to_string(tau.tag()) + " stopping time");
}

bool is_predictable_time(const FiniteFilteredSpace& space, const RandomTime& tau) {
    require_stopping_time(space, tau, "time");
    for (int t = 0; t <= space.horizon(); ++t) {
        const int level = t == 0 ? 0 : t - 1;
        if (!space.partition(tau.tag(), level).measurable([&](int a) { return tau(a) == t; }))
            return false;
    }
    return true;
}

namespace {

bool mask_predictable(const FiniteFilteredSpace& space, Filt tag, const PredictableSet::Mask& mask) {
    for (int t = 0; t <= space.horizon(); ++t) {
        const int level = t == 0 ? 0 : t - 1;
        if (!space.partition(tag, level).measurable([&](int a) { return mask(t, a); }))
            return false;
    }
    return true;
}

} // namespace

PredictableSet PredictableSet::everything(const FiniteFilteredSpace& space, Filt tag) {
    return up_to(space, tag, space.horizon());
}

PredictableSet PredictableSet::up_to(const FiniteFilteredSpace& space, Filt tag, int T) {
    require(T >= 0 && T <= space.horizon(), "interval end outside the horizon");
    PredictableSet s;
    s.tag_ = tag;
    s.mask_ = Mask::Constant(space.horizon() + 1, space.atoms(), false);
    s.mask_.topRows(T + 1).setConstant(true);
    return s;
}

PredictableSet PredictableSet::from_times(const FiniteFilteredSpace& space, std::vector<RandomTime> times) {
    require(!times.empty(), "predictable interval needs at least one time");
    PredictableSet s;
    s.tag_ = times.front().tag();
    s.mask_ = Mask::Constant(space.horizon() + 1, space.atoms(), false);
    for (const auto& tau : times) {
        require(tau.tag() == s.tag_, "mixed filtrations in a predictable interval");
        require_stopping_time(space, tau, "interval end");
        for (int a = 0; a < space.atoms(); ++a)
            for (int t = 0; t <= space.horizon() && t <= tau(a); ++t)
                s.mask_(t, a) = true;
    }
    s.times_ = std::move(times);
    return s;
}

PredictableSet PredictableSet::from_mask(const FiniteFilteredSpace& space, Filt tag, Mask mask) {
    require(mask.rows() == space.horizon() + 1 && mask.cols() == space.atoms(), "mask shape mismatch");
    require(mask_predictable(space, tag, mask), "set is not predictable");
    PredictableSet s;
    s.tag_ = tag;
    s.mask_ = std::move(mask);
    return s;
}

PredictableSet PredictableSet::intersect(const FiniteFilteredSpace& space, const PredictableSet& other) const {
    return from_mask(space, finer(tag_, other.tag_), mask_ && other.mask_);
}

} // namespace filtrationlab
