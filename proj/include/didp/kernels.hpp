#pragma once

// Numeric kernels behind the networks. Each parallel kernel has a serial
// reference producing bit-identical results: work is split over independent
// output entries, never over a reduction axis.

#include <cstddef>
#include <vector>

#include "didp/learning.hpp"

namespace didp::kernels {

// out[r, k] = act(b_k + sum_c W[k, c] * in[r, c]) for r < n, act = tanh or identity.
void dense_forward_serial(const LayerShape& layer, const double* values, const double* in, std::size_t n,
                          double* out, bool apply_tanh);
void dense_forward_parallel(const LayerShape& layer, const double* values, const double* in, std::size_t n,
                            double* out, bool apply_tanh);

// Backpropagates d_out through one layer over n rows: accumulates parameter
// gradients into grad (indexed like values) and, when d_in is non-null, adds
// the input gradient to d_in.
void dense_backward(const LayerShape& layer, const double* values, const double* in, const double* out,
                    const double* d_out, std::size_t n, bool apply_tanh, double* grad, double* d_in);

// out[k] = sum over parts p (in order) of parts[p][k].
void sum_gradients_serial(const std::vector<std::vector<double>>& parts, std::vector<double>& out);
void sum_gradients_parallel(const std::vector<std::vector<double>>& parts, std::vector<double>& out);

}  // namespace didp::kernels
