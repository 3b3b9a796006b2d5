#pragma once

#include <span>

#include "liftaug/graph.hpp"

namespace liftaug {

class Rng;

// Elementwise binary (shapes must match).
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value div_elem(Value a, Value b);

// Elementwise unary.
Value neg(Value x);
Value relu(Value x);
Value leaky_relu(Value x, double slope);
Value vtanh(Value x);
Value softplus(Value x);
Value vexp(Value x);
Value vabs(Value x);
Value vsqrt(Value x);
Value recip(Value x);
Value clamp_max(Value x, double cap);
/// Elementwise y = f(x) with analytic derivative df.
Value unary_custom(Value x, double (*f)(double), double (*df)(double));

// Scalar-constant arithmetic.
Value smul(Value x, double c);
Value sadd(Value x, double c);
/// Multiply a tensor by a scalar node.
Value scale(Value x, Value s);

// Linear algebra.
Value matmul(Value a, Value b);
/// a * b^T
Value matmul_nt(Value a, Value b);
Value transpose_v(Value x);
Value reshape_v(Value x, std::vector<int> shape);

// Structure.
Value slice_rows(Value x, int r0, int r1);
Value slice_cols(Value x, int c0, int c1);
Value stack_rows(Tape& t, std::span<const Value> rows);
/// x (m x n) + row vector b ({1,n} or {n}) broadcast over rows.
Value add_rowvec(Value x, Value b);
/// Row-wise multiply: x (m x n) scaled per row by s (m x 1).
Value scale_rows(Value x, Value s);
/// Per-row sums: (m x n) -> (m x 1).
Value row_sums(Value x);

// Reductions to scalars.
Value sum(Value x);
Value mean(Value x);

/// x * W^T + b with W of shape (out x in).
Value linear(Value x, Value W, Value b);

/// Batch normalization over rows of x (B x n). Train mode uses batch
/// statistics (B >= 2 required) and updates the running buffers in
/// place; eval mode uses the running buffers. Gradients reach gamma and
/// beta only when train_params is set.
Value batch_norm(Tape& t, Value x, Param& gamma, Param& beta, Param& running_mean,
                 Param& running_var, bool train, bool train_params, double momentum = 0.1,
                 double eps = 1e-5);

/// Inverted dropout; identity in eval mode or at rate 0.
Value dropout(Value x, double rate, bool train, Rng& rng);

}  // namespace liftaug
