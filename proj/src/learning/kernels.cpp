#include "didp/kernels.hpp"

#include <cmath>
#include <cstdint>

namespace didp::kernels {

namespace {

inline void dense_row(const LayerShape& layer, const double* values, const double* in, double* out,
                      bool apply_tanh) {
  const double* w = values + layer.offset;
  const double* b = values + layer.bias_offset();
  for (std::size_t k = 0; k < layer.rows; ++k) {
    double z = b[k];
    const double* wk = w + k * layer.cols;
    for (std::size_t c = 0; c < layer.cols; ++c) z += wk[c] * in[c];
    out[k] = apply_tanh ? std::tanh(z) : z;
  }
}

void check_parts(const std::vector<std::vector<double>>& parts) {
  for (const auto& p : parts)
    if (p.size() != parts[0].size()) throw ShapeError("gradient parts differ in length");
}

}  // namespace

void dense_forward_serial(const LayerShape& layer, const double* values, const double* in, std::size_t n,
                          double* out, bool apply_tanh) {
  for (std::size_t r = 0; r < n; ++r) dense_row(layer, values, in + r * layer.cols, out + r * layer.rows, apply_tanh);
}

void dense_forward_parallel(const LayerShape& layer, const double* values, const double* in, std::size_t n,
                            double* out, bool apply_tanh) {
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    dense_row(layer, values, in + ur * layer.cols, out + ur * layer.rows, apply_tanh);
  }
}

void dense_backward(const LayerShape& layer, const double* values, const double* in, const double* out,
                    const double* d_out, std::size_t n, bool apply_tanh, double* grad, double* d_in) {
  const double* w = values + layer.offset;
  double* gw = grad + layer.offset;
  double* gb = grad + layer.bias_offset();
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = in + r * layer.cols;
    for (std::size_t k = 0; k < layer.rows; ++k) {
      double dz = d_out[r * layer.rows + k];
      if (apply_tanh) {
        const double y = out[r * layer.rows + k];
        dz *= 1.0 - y * y;
      }
      if (dz == 0.0) continue;
      gb[k] += dz;
      double* gwk = gw + k * layer.cols;
      for (std::size_t c = 0; c < layer.cols; ++c) gwk[c] += dz * x[c];
      if (d_in) {
        const double* wk = w + k * layer.cols;
        double* dx = d_in + r * layer.cols;
        for (std::size_t c = 0; c < layer.cols; ++c) dx[c] += dz * wk[c];
      }
    }
  }
}

void sum_gradients_serial(const std::vector<std::vector<double>>& parts, std::vector<double>& out) {
  if (parts.empty()) return;
  check_parts(parts);
  out.assign(parts[0].size(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double s = 0.0;
    for (const auto& p : parts) s += p[k];
    out[k] = s;
  }
}

void sum_gradients_parallel(const std::vector<std::vector<double>>& parts, std::vector<double>& out) {
  if (parts.empty()) return;
  check_parts(parts);
  out.assign(parts[0].size(), 0.0);
  const auto size = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < size; ++k) {
    double s = 0.0;
    for (const auto& p : parts) s += p[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(k)] = s;
  }
}

}  // namespace didp::kernels
