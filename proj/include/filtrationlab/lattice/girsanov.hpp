#pragma once

#include "filtrationlab/lattice/calculus.hpp"

#include <limits>

namespace filtrationlab {

/// Density process q = dP/dQ on F, its reciprocal p and both stochastic logarithms.
/// A vanishing q is representable (equivalent() is false); p, q̄, p̄ are then NaN.
template <class S>
class BasicDensityPair {
public:
    BasicDensityPair() = default;

    /// q must be an F-adapted Q-martingale with E_Q[q_t] = 1.
    static BasicDensityPair from_density(const FiniteFilteredSpace& space, BasicProcess<S> q, double tol = 1e-10) {
        require_shape(space, q, "density");
        require(is_optional(space, q, Filt::F), "density is not F-adapted");
        const Weights<S> w = reference_weights<S>(space);
        for (int t = 0; t <= q.horizon(); ++t)
            require(std::abs(q.values().row(t).dot(w.transpose()) - S(1)) <= S(tol),
                    "density does not have unit mass at t=" + std::to_string(t));
        require(is_martingale(space, q, Filt::F, w, tol).holds, "density is not a Q-martingale");

        BasicDensityPair d;
        d.q_ = BasicProcess<S>(q.values(), Filt::F, ProcessClass::optional);
        d.equivalent_ = (q.values().array() > S(0)).all();
        d.p_weights_ = w.cwiseProduct(q.values().row(q.horizon()).transpose());
        if (d.equivalent_) {
            d.p_ = BasicProcess<S>(q.values().cwiseInverse(), Filt::F, ProcessClass::optional);
            d.q_bar_ = stoch_log(d.q_);
            d.p_bar_ = stoch_log(d.p_);
        } else {
            const auto nan = Paths<S>::Constant(q.values().rows(), q.values().cols(), std::numeric_limits<S>::quiet_NaN());
            d.p_ = d.q_bar_ = d.p_bar_ = BasicProcess<S>(nan, Filt::F, ProcessClass::optional);
        }
        return d;
    }

    static BasicDensityPair identity(const FiniteFilteredSpace& space) {
        return from_density(space, BasicProcess<S>::constant(space.horizon(), space.atoms(), S(1)));
    }

    const BasicProcess<S>& q() const { return q_; }
    const BasicProcess<S>& p() const { return p_; }
    const BasicProcess<S>& q_bar() const { return q_bar_; }
    const BasicProcess<S>& p_bar() const { return p_bar_; }
    bool equivalent() const { return equivalent_; }
    /// P on atoms: w · q at the last time.
    const Weights<S>& p_weights() const { return p_weights_; }

private:
    BasicProcess<S> q_, p_, q_bar_, p_bar_;
    Weights<S> p_weights_;
    bool equivalent_ = false;
};

using DensityPair = BasicDensityPair<double>;

enum class GirsanovForm { optional, predictable };

/// Turns a (F,P)-martingale into a (F,Q)-martingale:
/// optional form X − q·[p,X], predictable form X − ⟨p̄,X⟩ with the bracket taken under P.
template <class S>
BasicProcess<S> girsanov_transform(const FiniteFilteredSpace& space, const BasicProcess<S>& x,
                                   const BasicDensityPair<S>& d, GirsanovForm form) {
    require(d.equivalent(), "girsanov_transform: density is not equivalent");
    if (form == GirsanovForm::optional)
        return x - stieltjes(d.q(), square_bracket(d.p(), x));
    return x - angle_bracket(space, d.p_bar(), x, Filt::F, d.p_weights());
}

/// q̄ rebuilt from p alone: Δq̄_t = −q_t Δp_t.
template <class S>
BasicProcess<S> log_density_from_p(const BasicDensityPair<S>& d) {
    return -stieltjes(d.q(), d.p());
}

/// q̄ rebuilt from p̄ alone: Δq̄ = −Δp̄ + (Δp̄)²/(1+Δp̄) (no continuous part in discrete time).
template <class S>
BasicProcess<S> log_density_from_p_bar(const BasicDensityPair<S>& d) {
    const Paths<S> dp = increments(d.p_bar().values());
    const Paths<S> dq = (-dp.array() + dp.array().square() / (dp.array() + S(1))).matrix();
    return {accumulate(dq), Filt::F, ProcessClass::optional};
}

} // namespace filtrationlab
