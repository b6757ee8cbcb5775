#pragma once

#include "filtrationlab/error.hpp"

#include <Eigen/Dense>

#include <limits>
#include <map>
#include <string>
#include <vector>

namespace filtrationlab {

/// Which of the two filtrations a process or time is adapted to. F is the smaller one.
enum class Filt { F, G };

inline Filt finer(Filt a, Filt b) { return (a == Filt::G || b == Filt::G) ? Filt::G : Filt::F; }
inline const char* to_string(Filt f) { return f == Filt::F ? "F" : "G"; }

/// Partition of the atoms into cells. Cell ids are 0..n-1 in order of first appearance.
class Partition {
public:
    Partition() = default;
    explicit Partition(const std::vector<int>& labels);

    template <class Key>
    static Partition from_keys(const std::vector<Key>& keys) {
        std::map<Key, int> ids;
        std::vector<int> labels;
        labels.reserve(keys.size());
        for (const auto& k : keys) {
            auto [it, inserted] = ids.try_emplace(k, static_cast<int>(ids.size()));
            labels.push_back(it->second);
        }
        return Partition(labels);
    }

    static Partition trivial(int atoms);
    static Partition discrete(int atoms);

    int atoms() const { return static_cast<int>(cell_of_.size()); }
    int cells() const { return static_cast<int>(members_.size()); }
    int cell_of(int atom) const { return cell_of_[atom]; }
    const std::vector<int>& members(int cell) const { return members_[cell]; }
    const std::vector<int>& labels() const { return cell_of_; }

    /// True when every cell of *this lies inside a cell of `coarser`.
    bool refines(const Partition& coarser) const;

    /// True when the atom set {pred(atom)} is a union of cells.
    template <class Pred>
    bool measurable(Pred&& pred) const {
        for (const auto& cell : members_) {
            const bool first = pred(cell.front());
            for (int a : cell)
                if (static_cast<bool>(pred(a)) != first)
                    return false;
        }
        return true;
    }

    bool operator==(const Partition& other) const { return cell_of_ == other.cell_of_; }

private:
    std::vector<int> cell_of_;
    std::vector<std::vector<int>> members_;
};

/// Partitions indexed by t = 0..horizon, each refining the previous one.
class Filtration {
public:
    Filtration() = default;
    explicit Filtration(std::vector<Partition> levels);

    static Filtration trivial(int horizon, int atoms);

    int horizon() const { return static_cast<int>(levels_.size()) - 1; }
    int atoms() const { return levels_.empty() ? 0 : levels_.front().atoms(); }
    const Partition& at(int t) const { return levels_[t]; }

private:
    std::vector<Partition> levels_;
};

/// Finite Omega with reference measure Q and two nested filtrations F ⊆ G on t = 0..horizon.
class FiniteFilteredSpace {
public:
    FiniteFilteredSpace() = default;
    FiniteFilteredSpace(Eigen::VectorXd weights, Filtration F, Filtration G,
                        std::vector<std::string> atom_ids = {});

    int horizon() const { return F_.horizon(); }
    int atoms() const { return static_cast<int>(weights_.size()); }
    const Eigen::VectorXd& weights() const { return weights_; }
    const Filtration& filtration(Filt f) const { return f == Filt::F ? F_ : G_; }
    const Partition& partition(Filt f, int t) const { return filtration(f).at(t); }
    const std::string& atom_id(int atom) const { return atom_ids_[atom]; }

private:
    Eigen::VectorXd weights_;
    Filtration F_;
    Filtration G_;
    std::vector<std::string> atom_ids_;
};

/// Value used for "never happens" (θ = ∞).
inline constexpr int kNever = std::numeric_limits<int>::max();

/// Map atom -> {0..horizon} ∪ {kNever}.
class RandomTime {
public:
    RandomTime() = default;
    RandomTime(std::vector<int> values, Filt tag) : values_(std::move(values)), tag_(tag) {}

    static RandomTime constant(int atoms, int value, Filt tag) {
        return RandomTime(std::vector<int>(atoms, value), tag);
    }

    int operator()(int atom) const { return values_[atom]; }
    int atoms() const { return static_cast<int>(values_.size()); }
    Filt tag() const { return tag_; }
    const std::vector<int>& values() const { return values_; }
    bool never() const;
    /// Largest finite value, or -1 when the time never occurs.
    int max_finite() const;

    bool operator==(const RandomTime& other) const { return values_ == other.values_; }

private:
    std::vector<int> values_;
    Filt tag_ = Filt::F;
};

/// {τ ≤ t} is a union of cells at t for every t.
bool is_stopping_time(const FiniteFilteredSpace& space, const RandomTime& tau);
void require_stopping_time(const FiniteFilteredSpace& space, const RandomTime& tau, const char* what);

/// {τ = t} is measurable at t-1 for every t ≥ 1, and {τ = 0} at 0.
bool is_predictable_time(const FiniteFilteredSpace& space, const RandomTime& tau);

/// A predictable set of (t, atom) nodes, typically the interval ∪ₙ[0,τₙ].
/// Membership at t is constant on the cells at t-1 (at 0: on cells at 0).
class PredictableSet {
public:
    using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

    PredictableSet() = default;

    static PredictableSet everything(const FiniteFilteredSpace& space, Filt tag);
    /// [0, T].
    static PredictableSet up_to(const FiniteFilteredSpace& space, Filt tag, int T);
    /// ∪ₙ[0, τₙ]; each τₙ must be a stopping time for `tag`.
    static PredictableSet from_times(const FiniteFilteredSpace& space, std::vector<RandomTime> times);
    /// Validated against predictability.
    static PredictableSet from_mask(const FiniteFilteredSpace& space, Filt tag, Mask mask);

    bool contains(int t, int atom) const { return mask_(t, atom); }
    const Mask& mask() const { return mask_; }
    Filt tag() const { return tag_; }
    /// Empty unless built with from_times.
    const std::vector<RandomTime>& times() const { return times_; }

    PredictableSet intersect(const FiniteFilteredSpace& space, const PredictableSet& other) const;

private:
    Mask mask_;
    Filt tag_ = Filt::F;
    std::vector<RandomTime> times_;
};

} // namespace filtrationlab
