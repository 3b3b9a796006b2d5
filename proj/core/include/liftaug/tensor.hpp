#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace liftaug {

/// Dense row-major tensor of 64-bit floats. Rank 1 or 2 in practice;
/// scalars are represented as shape {1}.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor scalar(double value);
    static Tensor from(std::vector<int> shape, std::vector<double> values);
    static Tensor identity(int n);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    long numel() const { return static_cast<long>(data_.size()); }
    bool empty() const { return data_.empty(); }

    /// Rank-2 accessors; rank-1 tensors count as a single row.
    int rows() const;
    int cols() const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    double& operator[](long i) { return data_[static_cast<size_t>(i)]; }
    double operator[](long i) const { return data_[static_cast<size_t>(i)]; }
    double& at(int r, int c);
    double at(int r, int c) const;

    /// Value of a single-element tensor.
    double item() const;

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    std::string shape_str() const;

    Tensor& operator+=(const Tensor& o);
    Tensor& operator*=(double s);

  private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

/// Plain (non-differentiable) matrix products, Eigen-backed.
Tensor matmul_nn(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor transposed(const Tensor& a);

}  // namespace liftaug
