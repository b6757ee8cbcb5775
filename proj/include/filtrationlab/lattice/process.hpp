#pragma once

#include "filtrationlab/lattice/space.hpp"

#include <Eigen/Dense>

namespace filtrationlab {

enum class ProcessClass { raw, optional, predictable };

template <class Scalar>
using Paths = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Row = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <class Scalar>
using Weights = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Values X(t, atom) for t = 0..horizon, stored as a (horizon+1) x atoms matrix,
/// with the filtration it is adapted to and its measurability class.
template <class Scalar>
class BasicProcess {
public:
    using scalar_type = Scalar;
    using Matrix = Paths<Scalar>;

    BasicProcess() = default;
    BasicProcess(Matrix values, Filt tag, ProcessClass cls = ProcessClass::optional)
        : values_(std::move(values)), tag_(tag), class_(cls) {}

    static BasicProcess constant(int horizon, int atoms, Scalar c, Filt tag = Filt::F) {
        return BasicProcess(Matrix::Constant(horizon + 1, atoms, c), tag, ProcessClass::predictable);
    }
    static BasicProcess zero(int horizon, int atoms, Filt tag = Filt::F) {
        return constant(horizon, atoms, Scalar(0), tag);
    }

    int horizon() const { return static_cast<int>(values_.rows()) - 1; }
    int atoms() const { return static_cast<int>(values_.cols()); }
    Filt tag() const { return tag_; }
    ProcessClass process_class() const { return class_; }

    const Matrix& values() const { return values_; }
    Matrix& values() { return values_; }
    Scalar operator()(int t, int atom) const { return values_(t, atom); }
    Scalar& operator()(int t, int atom) { return values_(t, atom); }
    auto row(int t) const { return values_.row(t); }
    auto row(int t) { return values_.row(t); }

    BasicProcess retagged(Filt tag, ProcessClass cls) const { return BasicProcess(values_, tag, cls); }

private:
    Matrix values_;
    Filt tag_ = Filt::F;
    ProcessClass class_ = ProcessClass::raw;
};

using Process = BasicProcess<double>;

inline ProcessClass combine(ProcessClass a, ProcessClass b) {
    if (a == ProcessClass::raw || b == ProcessClass::raw)
        return ProcessClass::raw;
    if (a == ProcessClass::predictable && b == ProcessClass::predictable)
        return ProcessClass::predictable;
    return ProcessClass::optional;
}

template <class S>
BasicProcess<S> operator+(const BasicProcess<S>& x, const BasicProcess<S>& y) {
    return {x.values() + y.values(), finer(x.tag(), y.tag()), combine(x.process_class(), y.process_class())};
}
template <class S>
BasicProcess<S> operator-(const BasicProcess<S>& x, const BasicProcess<S>& y) {
    return {x.values() - y.values(), finer(x.tag(), y.tag()), combine(x.process_class(), y.process_class())};
}
template <class S>
BasicProcess<S> operator-(const BasicProcess<S>& x) {
    return {-x.values(), x.tag(), x.process_class()};
}
template <class S>
BasicProcess<S> operator*(S c, const BasicProcess<S>& x) {
    return {c * x.values(), x.tag(), x.process_class()};
}
/// Pointwise product.
template <class S>
BasicProcess<S> operator*(const BasicProcess<S>& x, const BasicProcess<S>& y) {
    return {x.values().cwiseProduct(y.values()), finer(x.tag(), y.tag()),
            combine(x.process_class(), y.process_class())};
}

/// Row t holds M(t-1); row 0 repeats M(0) (convention X_{0-} = X_0).
template <class Derived>
Paths<typename Derived::Scalar> lagged(const Eigen::MatrixBase<Derived>& m) {
    Paths<typename Derived::Scalar> out(m.rows(), m.cols());
    out.row(0) = m.row(0);
    if (m.rows() > 1)
        out.bottomRows(m.rows() - 1) = m.topRows(m.rows() - 1);
    return out;
}

/// Row t holds M(t) - M(t-1); row 0 is zero.
template <class Derived>
Paths<typename Derived::Scalar> increments(const Eigen::MatrixBase<Derived>& m) {
    Paths<typename Derived::Scalar> out(m.rows(), m.cols());
    out.row(0).setZero();
    if (m.rows() > 1)
        out.bottomRows(m.rows() - 1) = m.bottomRows(m.rows() - 1) - m.topRows(m.rows() - 1);
    return out;
}

/// Running sum over t of the rows of `inc`, ignoring row 0.
template <class Derived>
Paths<typename Derived::Scalar> accumulate(const Eigen::MatrixBase<Derived>& inc) {
    Paths<typename Derived::Scalar> out(inc.rows(), inc.cols());
    out.row(0).setZero();
    for (Eigen::Index t = 1; t < inc.rows(); ++t)
        out.row(t) = out.row(t - 1) + inc.row(t);
    return out;
}

/// 1 where the condition holds, 0 elsewhere.
template <class Derived>
Paths<double> indicator(const Eigen::ArrayBase<Derived>& condition) {
    return condition.template cast<double>().matrix();
}

template <class S>
Paths<S> lagged(const BasicProcess<S>& x) { return lagged(x.values()); }
template <class S>
Paths<S> increments(const BasicProcess<S>& x) { return increments(x.values()); }

} // namespace filtrationlab
