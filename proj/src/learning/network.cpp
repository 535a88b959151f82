#include <algorithm>
#include <cmath>
#include <random>

#include "didp/kernels.hpp"
#include "didp/learning.hpp"

namespace didp {

std::string head_name(HeadKind head) {
  switch (head) {
    case HeadKind::kQ: return "q";
    case HeadKind::kActor: return "actor";
    case HeadKind::kCritic: return "critic";
  }
  return "";
}

HeadKind parse_head(const std::string& name) {
  if (name == "q") return HeadKind::kQ;
  if (name == "actor") return HeadKind::kActor;
  if (name == "critic") return HeadKind::kCritic;
  throw CorruptParamsError("unknown head kind: " + name);
}

namespace {

LayerShape append_layer(std::vector<LayerShape>& list, std::size_t& offset, std::size_t rows, std::size_t cols) {
  LayerShape l{rows, cols, offset};
  offset += l.size();
  list.push_back(l);
  return l;
}

}  // namespace

NetworkParams init_network(DomainTag domain, HeadKind head, const NetworkConfig& config, std::uint64_t seed) {
  if (config.embed_dim == 0 || config.encoder_layers == 0 || config.hidden_dim == 0)
    throw InvalidConfigError("network dimensions must be positive");
  NetworkParams p;
  p.domain = domain;
  p.head = head;
  p.input_width = feature_width(domain);
  std::size_t offset = 0;
  std::size_t width = p.input_width;
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    append_layer(p.encoder, offset, config.embed_dim, width);
    width = config.embed_dim;
  }
  width = head == HeadKind::kCritic ? config.embed_dim : 2 * config.embed_dim;
  for (std::size_t l = 0; l < config.hidden_layers; ++l) {
    append_layer(p.trunk, offset, config.hidden_dim, width);
    width = config.hidden_dim;
  }
  std::size_t outputs = 1;
  if (head != HeadKind::kCritic && action_layout(domain) == ActionLayout::kCurrentElement) outputs = 2;
  append_layer(p.trunk, offset, outputs, width);

  p.values.assign(offset, 0.0);
  std::mt19937_64 rng(seed);
  auto fill = [&](const LayerShape& l) {
    const double a = std::sqrt(6.0 / static_cast<double>(l.rows + l.cols));
    std::uniform_real_distribution<double> dist(-a, a);
    for (std::size_t k = 0; k < l.weight_count(); ++k) p.values[l.offset + k] = dist(rng);
  };
  for (const auto& l : p.encoder) fill(l);
  for (const auto& l : p.trunk) fill(l);
  return p;
}

NetworkParams zero_like(const NetworkParams& p) {
  NetworkParams z = p;
  std::fill(z.values.begin(), z.values.end(), 0.0);
  return z;
}

struct ForwardPass {
  std::size_t n = 0;
  std::vector<std::vector<double>> enc;  // enc[0] = input, enc[l + 1] = layer l output
  std::vector<double> pooled;
  std::vector<std::size_t> rows;  // element rows fed to the trunk
  std::vector<std::vector<double>> trunk;
  std::vector<double> outputs;
};

namespace {

void check_input(const NetworkParams& p, const FeatureMatrix& x, std::size_t anchor) {
  if (x.cols != p.input_width)
    throw ShapeError("feature width " + std::to_string(x.cols) + " does not match network input " +
                     std::to_string(p.input_width));
  if (x.rows == 0 || x.data.size() != x.rows * x.cols) throw ShapeError("malformed feature matrix");
  if (p.layout() == ActionLayout::kCurrentElement && p.head != HeadKind::kCritic && anchor >= x.rows)
    throw ShapeError("anchor row out of range");
}

void run_forward(const NetworkParams& p, const FeatureMatrix& x, std::size_t anchor, ForwardPass& f) {
  check_input(p, x, anchor);
  f.n = x.rows;
  f.enc.assign(p.encoder.size() + 1, {});
  f.enc[0] = x.data;
  for (std::size_t l = 0; l < p.encoder.size(); ++l) {
    f.enc[l + 1].resize(f.n * p.encoder[l].rows);
    kernels::dense_forward_serial(p.encoder[l], p.values.data(), f.enc[l].data(), f.n, f.enc[l + 1].data(), true);
  }
  const std::size_t e = p.embed_dim();
  const auto& emb = f.enc.back();
  f.pooled.assign(e, 0.0);
  for (std::size_t r = 0; r < f.n; ++r)
    for (std::size_t k = 0; k < e; ++k) f.pooled[k] += emb[r * e + k];
  for (auto& v : f.pooled) v /= static_cast<double>(f.n);

  f.trunk.assign(p.trunk.size() + 1, {});
  std::size_t count = 1;
  if (p.head == HeadKind::kCritic) {
    f.rows.clear();
    f.trunk[0] = f.pooled;
  } else {
    if (p.layout() == ActionLayout::kPerElement) {
      f.rows.resize(f.n);
      for (std::size_t r = 0; r < f.n; ++r) f.rows[r] = r;
    } else {
      f.rows = {anchor};
    }
    count = f.rows.size();
    auto& in = f.trunk[0];
    in.resize(count * 2 * e);
    for (std::size_t i = 0; i < count; ++i) {
      std::copy(f.pooled.begin(), f.pooled.end(), in.begin() + static_cast<std::ptrdiff_t>(i * 2 * e));
      std::copy(emb.begin() + static_cast<std::ptrdiff_t>(f.rows[i] * e),
                emb.begin() + static_cast<std::ptrdiff_t>((f.rows[i] + 1) * e),
                in.begin() + static_cast<std::ptrdiff_t>(i * 2 * e + e));
    }
  }
  for (std::size_t l = 0; l < p.trunk.size(); ++l) {
    f.trunk[l + 1].resize(count * p.trunk[l].rows);
    const bool hidden = l + 1 < p.trunk.size();
    kernels::dense_forward_serial(p.trunk[l], p.values.data(), f.trunk[l].data(), count, f.trunk[l + 1].data(),
                                  hidden);
  }
  f.outputs = f.trunk.back();
}

void run_backward(const NetworkParams& p, const ForwardPass& f, std::span<const double> d_outputs,
                  std::vector<double>& grad) {
  if (d_outputs.size() != f.outputs.size()) throw ShapeError("output gradient size mismatch");
  if (grad.size() != p.values.size()) grad.assign(p.values.size(), 0.0);
  const std::size_t count = p.head == HeadKind::kCritic ? 1 : f.rows.size();
  std::vector<double> d_out(d_outputs.begin(), d_outputs.end());
  for (std::size_t l = p.trunk.size(); l-- > 0;) {
    std::vector<double> d_in(count * p.trunk[l].cols, 0.0);
    kernels::dense_backward(p.trunk[l], p.values.data(), f.trunk[l].data(), f.trunk[l + 1].data(), d_out.data(),
                            count, l + 1 < p.trunk.size(), grad.data(), d_in.data());
    d_out = std::move(d_in);
  }
  const std::size_t e = p.embed_dim();
  std::vector<double> d_pooled(e, 0.0);
  std::vector<double> d_emb(f.n * e, 0.0);
  if (p.head == HeadKind::kCritic) {
    d_pooled = d_out;
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t k = 0; k < e; ++k) {
        d_pooled[k] += d_out[i * 2 * e + k];
        d_emb[f.rows[i] * e + k] += d_out[i * 2 * e + e + k];
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(f.n);
  for (std::size_t r = 0; r < f.n; ++r)
    for (std::size_t k = 0; k < e; ++k) d_emb[r * e + k] += d_pooled[k] * inv_n;
  d_out = std::move(d_emb);
  for (std::size_t l = p.encoder.size(); l-- > 0;) {
    std::vector<double> d_in;
    if (l > 0) d_in.assign(f.n * p.encoder[l].cols, 0.0);
    kernels::dense_backward(p.encoder[l], p.values.data(), f.enc[l].data(), f.enc[l + 1].data(), d_out.data(), f.n,
                            true, grad.data(), l > 0 ? d_in.data() : nullptr);
    d_out = std::move(d_in);
  }
}

std::size_t action_space(const NetworkParams& p, const FeatureMatrix& x) {
  if (p.head == HeadKind::kCritic) return 1;
  return p.layout() == ActionLayout::kPerElement ? x.rows : 2;
}

}  // namespace

NetworkTape::NetworkTape(const NetworkParams& p, const FeatureMatrix& x, std::size_t anchor)
    : pass_(std::make_unique<ForwardPass>()), params_(&p) {
  run_forward(p, x, anchor, *pass_);
}

NetworkTape::~NetworkTape() = default;
NetworkTape::NetworkTape(NetworkTape&&) noexcept = default;

const std::vector<double>& NetworkTape::outputs() const { return pass_->outputs; }

void NetworkTape::backward(std::span<const double> d_outputs, std::vector<double>& grad) const {
  run_backward(*params_, *pass_, d_outputs, grad);
}

std::vector<double> masked_softmax(std::span<const double> logits, const std::vector<char>& mask,
                                   double temperature) {
  if (mask.size() != logits.size()) throw ShapeError("mask size does not match logits");
  std::vector<double> out(logits.size(), 0.0);
  double top = -kInfinity;
  for (std::size_t k = 0; k < logits.size(); ++k)
    if (mask[k]) top = std::max(top, logits[k] / temperature);
  if (top == -kInfinity) return out;
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (!mask[k]) continue;
    out[k] = std::exp(logits[k] / temperature - top);
    total += out[k];
  }
  for (auto& v : out) v /= total;
  return out;
}

std::vector<double> forward(const NetworkParams& p, const FeatureMatrix& x, const std::vector<char>& mask,
                            std::size_t anchor) {
  ForwardPass f;
  run_forward(p, x, anchor, f);
  if (p.head == HeadKind::kCritic) return f.outputs;
  if (mask.size() != action_space(p, x))
    throw ShapeError("mask has " + std::to_string(mask.size()) + " entries, expected " +
                     std::to_string(action_space(p, x)));
  if (p.head == HeadKind::kQ) return f.outputs;
  return masked_softmax(f.outputs, mask);
}

std::vector<double> pooled_embedding(const NetworkParams& p, const FeatureMatrix& x) {
  ForwardPass f;
  run_forward(p, x, 0, f);
  return f.pooled;
}

}  // namespace didp
