#pragma once

#include "filtrationlab/lattice/process.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace filtrationlab {

enum class Projection { optional, predictable };
enum class StopMode { at, before };

/// Weighted cell averages of `x` over the cells of `cells`.
/// Computed as x(first) + mean(x - x(first)), so cell-constant input comes back bit-identical.
template <class DX, class DW>
Row<typename DX::Scalar> cond_exp(const Eigen::DenseBase<DX>& x, const Partition& cells,
                                  const Eigen::DenseBase<DW>& w) {
    using Scalar = typename DX::Scalar;
    require(x.size() == cells.atoms() && w.size() == cells.atoms(), "cond_exp: size mismatch");
    Row<Scalar> out(x.size());
    for (int c = 0; c < cells.cells(); ++c) {
        const auto& members = cells.members(c);
        const Scalar base = x(members.front());
        Scalar mass(0), sum(0);
        for (int a : members) {
            mass += w(a);
            sum += w(a) * (x(a) - base);
        }
        require(mass > Scalar(0), "cond_exp: cell of zero weight");
        const Scalar value = base + sum / mass;
        for (int a : members)
            out(a) = value;
    }
    return out;
}

template <class S>
Weights<S> reference_weights(const FiniteFilteredSpace& space) {
    return space.weights().template cast<S>();
}

template <class DX>
bool row_measurable(const Eigen::DenseBase<DX>& x, const Partition& cells) {
    for (int c = 0; c < cells.cells(); ++c) {
        const auto& members = cells.members(c);
        for (int a : members)
            if (x(a) != x(members.front()))
                return false;
    }
    return true;
}

/// Values at t constant on the cells at t of `tag`.
template <class S>
bool is_optional(const FiniteFilteredSpace& space, const BasicProcess<S>& x, Filt tag) {
    for (int t = 0; t <= x.horizon(); ++t)
        if (!row_measurable(x.row(t), space.partition(tag, t)))
            return false;
    return true;
}

/// Values at t constant on the cells at t-1 (at t = 0: cells at 0).
template <class S>
bool is_predictable(const FiniteFilteredSpace& space, const BasicProcess<S>& x, Filt tag) {
    for (int t = 0; t <= x.horizon(); ++t)
        if (!row_measurable(x.row(t), space.partition(tag, t == 0 ? 0 : t - 1)))
            return false;
    return true;
}

template <class S>
void require_shape(const FiniteFilteredSpace& space, const BasicProcess<S>& x, const char* what) {
    require(x.horizon() == space.horizon() && x.atoms() == space.atoms(),
            std::string(what) + ": process shape does not match the space");
}

/// Optional projection E[X_t | F_t] or predictable projection E[X_t | F_{t-1}] (E[X_0 | F_0] at 0).
template <class S>
BasicProcess<S> project(const FiniteFilteredSpace& space, const BasicProcess<S>& x, Projection kind, Filt target,
                        const Weights<S>& w) {
    require_shape(space, x, "project");
    BasicProcess<S> out(Paths<S>(x.values().rows(), x.values().cols()), target,
                        kind == Projection::optional ? ProcessClass::optional : ProcessClass::predictable);
    for (int t = 0; t <= x.horizon(); ++t) {
        const int level = (kind == Projection::optional || t == 0) ? t : t - 1;
        out.row(t) = cond_exp(x.row(t), space.partition(target, level), w);
    }
    return out;
}

template <class S>
BasicProcess<S> project(const FiniteFilteredSpace& space, const BasicProcess<S>& x, Projection kind,
                        Filt target = Filt::F) {
    return project(space, x, kind, target, reference_weights<S>(space));
}

/// Dual projection of a finite-variation process: increments E[ΔA_t | F_{t-1}] (predictable)
/// or E[ΔA_t | F_t] (optional), started at E[A_0 | F_0].
template <class S>
BasicProcess<S> dual_projection(const FiniteFilteredSpace& space, const BasicProcess<S>& a, Projection kind,
                                Filt target, const Weights<S>& w) {
    require_shape(space, a, "dual_projection");
    const Paths<S> inc = increments(a.values());
    Paths<S> out(inc.rows(), inc.cols());
    out.row(0) = cond_exp(a.row(0), space.partition(target, 0), w);
    for (int t = 1; t <= a.horizon(); ++t) {
        const int level = kind == Projection::optional ? t : t - 1;
        out.row(t) = out.row(t - 1) + cond_exp(inc.row(t), space.partition(target, level), w);
    }
    return {std::move(out), target, kind == Projection::optional ? ProcessClass::optional : ProcessClass::predictable};
}

template <class S>
BasicProcess<S> dual_projection(const FiniteFilteredSpace& space, const BasicProcess<S>& a, Projection kind,
                                Filt target = Filt::F) {
    return dual_projection(space, a, kind, target, reference_weights<S>(space));
}

template <class S>
struct DoobDecomposition {
    BasicProcess<S> martingale;   ///< M, M_0 = 0
    BasicProcess<S> predictable;  ///< A, A_0 = 0; X = X_0 + M + A
};

template <class S>
DoobDecomposition<S> doob_decomposition(const FiniteFilteredSpace& space, const BasicProcess<S>& x, Filt target,
                                        const Weights<S>& w) {
    require_shape(space, x, "doob_decomposition");
    require(is_optional(space, x, target), "doob_decomposition: process is not adapted");
    const Paths<S> inc = increments(x.values());
    Paths<S> drift(inc.rows(), inc.cols());
    drift.row(0).setZero();
    for (int t = 1; t <= x.horizon(); ++t)
        drift.row(t) = cond_exp(inc.row(t), space.partition(target, t - 1), w);
    Paths<S> a = accumulate(drift);
    Paths<S> m = x.values() - a;
    m.rowwise() -= x.values().row(0);
    return {BasicProcess<S>(std::move(m), target, ProcessClass::optional),
            BasicProcess<S>(std::move(a), target, ProcessClass::predictable)};
}

template <class S>
DoobDecomposition<S> doob_decomposition(const FiniteFilteredSpace& space, const BasicProcess<S>& x,
                                        Filt target = Filt::F) {
    return doob_decomposition(space, x, target, reference_weights<S>(space));
}

/// (H·X)_t = Σ_{s=1..t} H_s ΔX_s. H must be predictable for the finer of the two filtrations.
template <class S>
BasicProcess<S> stoch_integral(const FiniteFilteredSpace& space, const BasicProcess<S>& h, const BasicProcess<S>& x) {
    require_shape(space, h, "stoch_integral");
    require_shape(space, x, "stoch_integral");
    const Filt tag = finer(h.tag(), x.tag());
    require(is_predictable(space, h, tag), "stoch_integral: integrand is not predictable");
    return {accumulate(h.values().cwiseProduct(increments(x.values())).eval()), tag,
            combine(ProcessClass::optional, x.process_class())};
}

/// Pathwise Stieltjes sum Σ_{s=1..t} H_s ΔA_s; no predictability required (finite-variation integrator).
template <class S>
BasicProcess<S> stieltjes(const BasicProcess<S>& h, const BasicProcess<S>& a) {
    return {accumulate(h.values().cwiseProduct(increments(a.values())).eval()), finer(h.tag(), a.tag()),
            combine(h.process_class(), a.process_class())};
}

/// [X,Y]_t = Σ_{s≤t} ΔX_s ΔY_s.
template <class S>
BasicProcess<S> square_bracket(const BasicProcess<S>& x, const BasicProcess<S>& y) {
    return {accumulate(increments(x.values()).cwiseProduct(increments(y.values())).eval()), finer(x.tag(), y.tag()),
            combine(x.process_class(), y.process_class())};
}

/// ⟨X,Y⟩: dual predictable projection of [X,Y].
template <class S>
BasicProcess<S> angle_bracket(const FiniteFilteredSpace& space, const BasicProcess<S>& x, const BasicProcess<S>& y,
                              Filt target, const Weights<S>& w) {
    return dual_projection(space, square_bracket(x, y), Projection::predictable, target, w);
}

template <class S>
struct Brackets {
    BasicProcess<S> square;
    BasicProcess<S> angle;
};

template <class S>
Brackets<S> brackets(const FiniteFilteredSpace& space, const BasicProcess<S>& x, const BasicProcess<S>& y,
                     const Weights<S>& w) {
    const Filt tag = finer(x.tag(), y.tag());
    auto sq = square_bracket(x, y);
    auto an = dual_projection(space, sq, Projection::predictable, tag, w);
    return {std::move(sq), std::move(an)};
}

template <class S>
Brackets<S> brackets(const FiniteFilteredSpace& space, const BasicProcess<S>& x, const BasicProcess<S>& y) {
    return brackets(space, x, y, reference_weights<S>(space));
}

/// 𝓔(X)_t = Π_{s≤t} (1 + ΔX_s). Once a factor is 0 the product stays 0.
template <class S>
BasicProcess<S> stoch_exp(const BasicProcess<S>& x) {
    const Paths<S> inc = increments(x.values());
    Paths<S> out(inc.rows(), inc.cols());
    out.row(0).setConstant(S(1));
    for (Eigen::Index t = 1; t < inc.rows(); ++t)
        out.row(t) = out.row(t - 1).cwiseProduct((inc.row(t).array() + S(1)).matrix());
    return {std::move(out), x.tag(), combine(ProcessClass::optional, x.process_class())};
}

/// 𝓔 with increments frozen outside `window`.
template <class S>
BasicProcess<S> stoch_exp(const BasicProcess<S>& x, const PredictableSet& window) {
    Paths<S> frozen = x.values();
    const Paths<S> inc = increments(x.values());
    frozen.row(0) = x.values().row(0);
    for (Eigen::Index t = 1; t < inc.rows(); ++t)
        for (Eigen::Index a = 0; a < inc.cols(); ++a)
            frozen(t, a) = frozen(t - 1, a) + (window.contains(static_cast<int>(t), static_cast<int>(a)) ? inc(t, a) : S(0));
    return stoch_exp(BasicProcess<S>(std::move(frozen), x.tag(), x.process_class()));
}

/// Ȳ = (1/Y₋)·Y on `window`; Y must be positive there.
template <class S>
BasicProcess<S> stoch_log(const BasicProcess<S>& y, const PredictableSet& window) {
    Paths<S> inc = increments(y.values());
    for (Eigen::Index t = 1; t < inc.rows(); ++t)
        for (Eigen::Index a = 0; a < inc.cols(); ++a) {
            if (!window.contains(static_cast<int>(t), static_cast<int>(a))) {
                inc(t, a) = S(0);
                continue;
            }
            require(y(t - 1, a) > S(0) && y(t, a) > S(0),
                    "stoch_log: process not positive at t=" + std::to_string(t) + " atom " + std::to_string(a));
            inc(t, a) /= y(t - 1, a);
        }
    return {accumulate(inc), y.tag(), combine(ProcessClass::optional, y.process_class())};
}

template <class S>
BasicProcess<S> stoch_log(const BasicProcess<S>& y) {
    Paths<S> inc = increments(y.values());
    for (Eigen::Index t = 1; t < inc.rows(); ++t)
        for (Eigen::Index a = 0; a < inc.cols(); ++a) {
            require(y(t - 1, a) > S(0) && y(t, a) > S(0),
                    "stoch_log: process not positive at t=" + std::to_string(t) + " atom " + std::to_string(a));
            inc(t, a) /= y(t - 1, a);
        }
    return {accumulate(inc), y.tag(), combine(ProcessClass::optional, y.process_class())};
}

/// X^τ (at) or X^{τ-} (before, X_{0-} = X_0).
template <class S>
BasicProcess<S> stop(const BasicProcess<S>& x, const RandomTime& tau, StopMode mode) {
    require(tau.atoms() == x.atoms(), "stop: atom count mismatch");
    Paths<S> out = x.values();
    for (int a = 0; a < x.atoms(); ++a) {
        if (tau(a) == kNever)
            continue;
        const int frozen_at = mode == StopMode::at ? tau(a) : std::max(tau(a) - 1, 0);
        for (int t = tau(a); t <= x.horizon(); ++t)
            out(t, a) = x(std::min(frozen_at, x.horizon()), a);
    }
    return {std::move(out), finer(x.tag(), tau.tag()), ProcessClass::optional};
}

template <class S>
struct MartingaleCheck {
    bool holds = true;
    S residual = S(0);  ///< max |E[ΔX_t | cell at t-1]| over the window
    int worst_t = -1;
    int worst_atom = -1;
    explicit operator bool() const { return holds; }
};

/// Max conditional drift of X over the cells inside `window` (all of [0, horizon] when null).
/// On a finite space a local martingale on a predictable interval is a martingale of the stopped
/// process, so checking the one-step drifts inside the window is exhaustive.
template <class S>
MartingaleCheck<S> martingale_residual(const FiniteFilteredSpace& space, const BasicProcess<S>& x, Filt tag,
                                       const Weights<S>& w, const PredictableSet* window = nullptr) {
    require_shape(space, x, "is_martingale");
    require(!(x.tag() == Filt::G && tag == Filt::F), "is_martingale: G process tested against F");
    MartingaleCheck<S> out;
    for (int t = 1; t <= x.horizon(); ++t) {
        const Partition& cells = space.partition(tag, t - 1);
        for (int c = 0; c < cells.cells(); ++c) {
            const auto& members = cells.members(c);
            if (window && !window->contains(t, members.front()))
                continue;
            S mass(0), sum(0);
            for (int a : members) {
                mass += w(a);
                sum += w(a) * (x(t, a) - x(t - 1, a));
            }
            const S r = std::abs(sum / mass);
            if (!(r <= out.residual)) {
                out.residual = r;
                out.worst_t = t;
                out.worst_atom = members.front();
            }
        }
    }
    return out;
}

template <class S>
MartingaleCheck<S> is_martingale(const FiniteFilteredSpace& space, const BasicProcess<S>& x, Filt tag,
                                 const Weights<S>& w, double tol, const PredictableSet* window = nullptr) {
    auto check = martingale_residual(space, x, tag, w, window);
    check.holds = check.residual <= S(tol);
    return check;
}

template <class S>
MartingaleCheck<S> is_martingale(const FiniteFilteredSpace& space, const BasicProcess<S>& x, Filt tag, double tol,
                                 const PredictableSet* window = nullptr) {
    return is_martingale(space, x, tag, reference_weights<S>(space), tol, window);
}

/// One-jump martingale Y = (1_child − w(child)/w(parent))·1_{[t,∞)} on `parent`, zero elsewhere.
struct ElementaryMartingale {
    int t = 0;
    int parent = 0;  ///< cell at t-1
    int child = 0;   ///< cell at t inside parent
};

/// All one-jump martingales for t = 1..T; together with constants they span every martingale on [0,T].
std::vector<ElementaryMartingale> elementary_martingales(const FiniteFilteredSpace& space, Filt tag, int T);

template <class S>
BasicProcess<S> materialize(const FiniteFilteredSpace& space, Filt tag, const Weights<S>& w,
                            const ElementaryMartingale& e) {
    const Partition& parent = space.partition(tag, e.t - 1);
    const Partition& child = space.partition(tag, e.t);
    S parent_mass(0), child_mass(0);
    for (int a : parent.members(e.parent)) {
        parent_mass += w(a);
        if (child.cell_of(a) == e.child)
            child_mass += w(a);
    }
    const S p = child_mass / parent_mass;
    Paths<S> values = Paths<S>::Zero(space.horizon() + 1, space.atoms());
    for (int a : parent.members(e.parent)) {
        const S jump = (child.cell_of(a) == e.child ? S(1) : S(0)) - p;
        values.block(e.t, a, space.horizon() + 1 - e.t, 1).setConstant(jump);
    }
    return {std::move(values), tag, ProcessClass::optional};
}

/// Closed martingales E_w[1_e | ·_t] for every cell e at time T, constant after T.
template <class S>
std::vector<BasicProcess<S>> terminal_cell_martingales(const FiniteFilteredSpace& space, Filt tag,
                                                       const Weights<S>& w, int T) {
    const Partition& terminal = space.partition(tag, T);
    std::vector<BasicProcess<S>> out;
    out.reserve(terminal.cells());
    for (int e = 0; e < terminal.cells(); ++e) {
        Row<S> payoff = Row<S>::Zero(space.atoms());
        for (int a : terminal.members(e))
            payoff(a) = S(1);
        Paths<S> values(space.horizon() + 1, space.atoms());
        for (int t = 0; t <= space.horizon(); ++t)
            values.row(t) = t <= T ? cond_exp(payoff, space.partition(tag, t), w) : payoff;
        out.emplace_back(std::move(values), tag, ProcessClass::optional);
    }
    return out;
}

/// Rigidity probe: is [X,Y] a martingale on [0,T] for every spanning martingale Y?
template <class S>
MartingaleCheck<S> orthogonal_to_all_martingales(const FiniteFilteredSpace& space, const BasicProcess<S>& x, Filt tag,
                                                 const Weights<S>& w, int T, double tol) {
    const auto window = PredictableSet::up_to(space, tag, T);
    MartingaleCheck<S> worst;
    for (const auto& e : elementary_martingales(space, tag, T)) {
        const auto y = materialize(space, tag, w, e);
        auto check = is_martingale(space, square_bracket(x, y), tag, w, tol, &window);
        if (check.residual > worst.residual || !check.holds)
            worst = check;
    }
    worst.holds = worst.residual <= S(tol);
    return worst;
}

} // namespace filtrationlab
