#include "liftaug/tensor.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "liftaug/errors.hpp"

namespace liftaug {

namespace {

long shape_numel(const std::vector<int>& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have rank >= 1");
    long n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

ConstMatMap as_matrix(const Tensor& t) {
    return ConstMatMap(t.data(), t.rows(), t.cols());
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = value;
    return t;
}

Tensor Tensor::scalar(double value) { return full({1}, value); }

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
    long n = shape_numel(shape);
    if (n != static_cast<long>(values.size()))
        throw ShapeError("value count does not match shape");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(values);
    return t;
}

Tensor Tensor::identity(int n) {
    Tensor t({n, n});
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

int Tensor::rows() const {
    if (rank() == 1) return 1;
    if (rank() == 2) return shape_[0];
    throw ShapeError("rows() needs rank 1 or 2, got " + shape_str());
}

int Tensor::cols() const {
    if (rank() == 1) return shape_[0];
    if (rank() == 2) return shape_[1];
    throw ShapeError("cols() needs rank 1 or 2, got " + shape_str());
}

double& Tensor::at(int r, int c) {
    return data_[static_cast<size_t>(r) * static_cast<size_t>(cols()) + static_cast<size_t>(c)];
}

double Tensor::at(int r, int c) const {
    return data_[static_cast<size_t>(r) * static_cast<size_t>(cols()) + static_cast<size_t>(c)];
}

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str());
    return data_[0];
}

bool Tensor::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '{';
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << '}';
    return os.str();
}

Tensor& Tensor::operator+=(const Tensor& o) {
    if (!same_shape(o)) throw ShapeError("+= shape mismatch " + shape_str() + " vs " + o.shape_str());
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
}

Tensor matmul_nn(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul " + a.shape_str() + " x " + b.shape_str());
    Tensor out({a.rows(), b.cols()});
    MatMap(out.data(), out.rows(), out.cols()).noalias() = as_matrix(a) * as_matrix(b);
    return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols())
        throw ShapeError("matmul_nt " + a.shape_str() + " x " + b.shape_str());
    Tensor out({a.rows(), b.rows()});
    MatMap(out.data(), out.rows(), out.cols()).noalias() =
        as_matrix(a) * as_matrix(b).transpose();
    return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows())
        throw ShapeError("matmul_tn " + a.shape_str() + " x " + b.shape_str());
    Tensor out({a.cols(), b.cols()});
    MatMap(out.data(), out.rows(), out.cols()).noalias() =
        as_matrix(a).transpose() * as_matrix(b);
    return out;
}

Tensor transposed(const Tensor& a) {
    Tensor out({a.cols(), a.rows()});
    MatMap(out.data(), out.rows(), out.cols()) = as_matrix(a).transpose();
    return out;
}

}  // namespace liftaug
