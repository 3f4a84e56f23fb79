#pragma once

// Neural building blocks on top of the autodiff engine: linear and Conv1D
// layers, batch normalization, coordinate embedding, Adam, and a binary
// parameter checkpoint format.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "radiomap/autodiff.hpp"
#include "radiomap/rng.hpp"

namespace radiomap::nn {

using ad::Shape;
using ad::Tensor;

/// Ordered, uniquely named collection of leaf tensors. Used both as the
/// optimizer's parameter list and as the checkpoint unit.
class ParamSet {
 public:
  void add(const std::string& name, const Tensor& t) {
    if (index_.count(name)) throw std::invalid_argument("ParamSet: duplicate name " + name);
    index_[name] = items_.size();
    items_.emplace_back(name, t);
  }

  const Tensor& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamSet: no parameter named " + name);
    return items_[it->second].second;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t size() const { return items_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }

  std::vector<Tensor> tensors() const {
    std::vector<Tensor> out;
    out.reserve(items_.size());
    for (const auto& [_, t] : items_) out.push_back(t);
    return out;
  }

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// initialization
// ---------------------------------------------------------------------------

constexpr double kDefaultLeakySlope = 0.2;

/// Kaiming-uniform fan-in initialization with the leaky-rectifier gain.
inline Tensor kaiming_uniform(Shape shape, int fan_in, Rng& rng,
                              double leaky_slope = kDefaultLeakySlope) {
  const double gain = std::sqrt(2.0 / (1.0 + leaky_slope * leaky_slope));
  const double bound = gain * std::sqrt(3.0 / fan_in);
  std::vector<double> v(ad::numel(shape));
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor::leaf(std::move(shape), std::move(v));
}

// ---------------------------------------------------------------------------
// layers
// ---------------------------------------------------------------------------

struct Linear {
  Tensor w;  // [in, out]
  Tensor b;  // [out]

  static Linear init(int in, int out, Rng& rng, double slope = kDefaultLeakySlope) {
    return Linear{kaiming_uniform({in, out}, in, rng, slope), Tensor::zeros({out})};
  }

  /// x [batch, in] -> x*W + b [batch, out]
  Tensor forward(const Tensor& x) const { return ad::add(ad::matmul(x, w), b); }

  void collect(ParamSet& ps, const std::string& prefix) const {
    ps.add(prefix + ".w", w);
    ps.add(prefix + ".b", b);
  }
};

namespace detail {

// im2col index map for same-padded 1-D cross-correlation
inline ad::IndexMap unfold1d_map(int batch, int channels, int length, int kernel) {
  thread_local std::map<std::tuple<int, int, int, int>, ad::IndexMap> cache;
  return ad::detail::cached_map(cache, std::make_tuple(batch, channels, length, kernel), [&] {
    const int pad = (kernel - 1) / 2;
    std::vector<std::int64_t> m(static_cast<std::size_t>(batch) * length * channels * kernel);
    std::size_t o = 0;
    for (int b = 0; b < batch; ++b)
      for (int t = 0; t < length; ++t)
        for (int c = 0; c < channels; ++c)
          for (int j = 0; j < kernel; ++j) {
            const int src_t = t + j - pad;
            m[o++] = (src_t >= 0 && src_t < length)
                         ? (static_cast<std::int64_t>(b) * channels + c) * length + src_t
                         : -1;
          }
    return m;
  });
}

// [batch*length, channels] rows back to [batch, channels, length]
inline ad::IndexMap rows_to_bct_map(int batch, int channels, int length) {
  thread_local std::map<std::tuple<int, int, int>, ad::IndexMap> cache;
  return ad::detail::cached_map(cache, std::make_tuple(batch, channels, length), [&] {
    std::vector<std::int64_t> m(static_cast<std::size_t>(batch) * channels * length);
    std::size_t o = 0;
    for (int b = 0; b < batch; ++b)
      for (int c = 0; c < channels; ++c)
        for (int t = 0; t < length; ++t)
          m[o++] = (static_cast<std::int64_t>(b) * length + t) * channels + c;
    return m;
  });
}

// [batch, channels, length] to [channels, batch*length], for per-channel stats
inline ad::IndexMap bct_to_c_bt_map(int batch, int channels, int length) {
  thread_local std::map<std::tuple<int, int, int>, ad::IndexMap> cache;
  return ad::detail::cached_map(cache, std::make_tuple(batch, channels, length), [&] {
    std::vector<std::int64_t> m(static_cast<std::size_t>(batch) * channels * length);
    std::size_t o = 0;
    for (int c = 0; c < channels; ++c)
      for (int b = 0; b < batch; ++b)
        for (int t = 0; t < length; ++t)
          m[o++] = (static_cast<std::int64_t>(b) * channels + c) * length + t;
    return m;
  });
}

// per-channel vector [channels] broadcast to [batch, channels, length]
inline ad::IndexMap channel_broadcast_map(int batch, int channels, int length) {
  thread_local std::map<std::tuple<int, int, int>, ad::IndexMap> cache;
  return ad::detail::cached_map(cache, std::make_tuple(batch, channels, length), [&] {
    std::vector<std::int64_t> m(static_cast<std::size_t>(batch) * channels * length);
    std::size_t o = 0;
    for (int b = 0; b < batch; ++b)
      for (int c = 0; c < channels; ++c)
        for (int t = 0; t < length; ++t) m[o++] = c;
    return m;
  });
}

// [rows, 1] column vector broadcast to [rows, cols]
inline ad::IndexMap broadcast_cols_map(int rows, int cols) {
  thread_local std::map<std::pair<int, int>, ad::IndexMap> cache;
  return ad::detail::cached_map(cache, std::make_pair(rows, cols), [&] {
    std::vector<std::int64_t> m(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m[static_cast<std::size_t>(i) * cols + j] = i;
    return m;
  });
}

}  // namespace detail

/// Same-padded, stride-1 cross-correlation over [batch, channels, length].
struct Conv1d {
  Tensor w;  // [in_ch * kernel, out_ch], flat index (c*kernel + j) * out_ch + o
  Tensor b;  // [out_ch]
  int in_ch = 0, out_ch = 0, kernel = 3;

  static Conv1d init(int in_ch, int out_ch, int kernel, Rng& rng,
                     double slope = kDefaultLeakySlope) {
    if (kernel % 2 == 0) throw std::invalid_argument("Conv1d: kernel must be odd for same padding");
    Conv1d c;
    c.in_ch = in_ch;
    c.out_ch = out_ch;
    c.kernel = kernel;
    c.w = kaiming_uniform({in_ch * kernel, out_ch}, in_ch * kernel, rng, slope);
    c.b = Tensor::zeros({out_ch});
    return c;
  }

  Tensor forward(const Tensor& x) const {
    const auto& s = x.shape();
    if (s.size() != 3 || s[1] != in_ch)
      throw ad::ShapeError("Conv1d: expected [batch," + std::to_string(in_ch) + ",length], got " +
                           ad::shape_str(s));
    const int batch = s[0], length = s[2];
    if (length < 1) throw ad::ShapeError("Conv1d: length must be >= 1");
    const Tensor cols = ad::gather(x, detail::unfold1d_map(batch, in_ch, length, kernel),
                                   {batch * length, in_ch * kernel});
    const Tensor rows = ad::add(ad::matmul(cols, w), b);  // [batch*length, out_ch]
    return ad::gather(rows, detail::rows_to_bct_map(batch, out_ch, length), {batch, out_ch, length});
  }

  void collect(ParamSet& ps, const std::string& prefix) const {
    ps.add(prefix + ".w", w);
    ps.add(prefix + ".b", b);
  }
};

/// Per-channel batch normalization over [batch, channels, length]; batch
/// statistics in train mode, running statistics (momentum 0.9) in eval mode.
struct BatchNorm {
  Tensor gamma;  // [channels]
  Tensor beta;   // [channels]
  Tensor running_mean;  // [channels], not trainable
  Tensor running_var;   // [channels], not trainable
  double momentum = 0.9;
  double eps = 1e-5;
  int channels = 0;

  static BatchNorm init(int channels) {
    BatchNorm bn;
    bn.channels = channels;
    bn.gamma = Tensor::ones({channels});
    bn.beta = Tensor::zeros({channels});
    bn.running_mean = Tensor::zeros({channels});
    bn.running_var = Tensor::ones({channels});
    return bn;
  }

  Tensor forward(const Tensor& x, bool train) {
    const auto& s = x.shape();
    if (s.size() != 3 || s[1] != channels)
      throw ad::ShapeError("BatchNorm: expected [batch," + std::to_string(channels) +
                           ",length], got " + ad::shape_str(s));
    const int batch = s[0], length = s[2];
    const int per_channel = batch * length;
    const auto bc = detail::channel_broadcast_map(batch, channels, length);

    Tensor mean_c, var_c;  // [channels, 1]
    if (train) {
      if (batch < 2) throw std::invalid_argument("BatchNorm: train mode needs batch >= 2");
      const Tensor by_channel = ad::gather(x, detail::bct_to_c_bt_map(batch, channels, length),
                                           {channels, per_channel});
      mean_c = ad::scale(ad::sum_rows(by_channel), 1.0 / per_channel);
      const Tensor centered = ad::sub(
          by_channel,
          ad::gather(mean_c, detail::broadcast_cols_map(channels, per_channel), {channels, per_channel}));
      var_c = ad::scale(ad::sum_rows(ad::square(centered)), 1.0 / per_channel);

      auto rm = running_mean.values();
      auto rv = running_var.values();
      for (int c = 0; c < channels; ++c) {
        rm[c] = momentum * rm[c] + (1.0 - momentum) * mean_c.values()[c];
        rv[c] = momentum * rv[c] + (1.0 - momentum) * var_c.values()[c];
      }
      running_mean.set_values(rm);
      running_var.set_values(rv);
    } else {
      mean_c = ad::reshape(running_mean, {channels, 1});
      var_c = ad::reshape(running_var, {channels, 1});
    }

    const Tensor mean_full = ad::gather(ad::reshape(mean_c, {channels}), bc, s);
    const Tensor inv_std = ad::pow_const(ad::add_const(var_c, eps), -0.5);
    const Tensor inv_full = ad::gather(ad::reshape(inv_std, {channels}), bc, s);
    const Tensor norm = ad::mul_same(ad::sub(x, mean_full), inv_full);
    return ad::add_same(ad::mul_same(norm, ad::gather(gamma, bc, s)), ad::gather(beta, bc, s));
  }

  void collect(ParamSet& ps, const std::string& prefix) const {
    ps.add(prefix + ".gamma", gamma);
    ps.add(prefix + ".beta", beta);
  }

  /// Running statistics belong in checkpoints but not in the optimizer.
  void collect_state(ParamSet& ps, const std::string& prefix) const {
    ps.add(prefix + ".running_mean", running_mean);
    ps.add(prefix + ".running_var", running_var);
  }
};

/// Learned affine map from a normalized 2-D reference-point coordinate to an
/// embedding matching the RSS dimensionality.
struct CoordEmbed {
  Linear proj;  // 2 -> embed_dim
  double slope = kDefaultLeakySlope;

  static CoordEmbed init(int embed_dim, Rng& rng, double slope = kDefaultLeakySlope) {
    return CoordEmbed{Linear::init(2, embed_dim, rng, slope), slope};
  }

  /// rp [batch, 2], coordinates expected in [0,1]^2.
  Tensor forward(const Tensor& rp) const {
#ifndef NDEBUG
    for (double v : rp.values())
      if (v < -1e-9 || v > 1.0 + 1e-9)
        throw std::invalid_argument("CoordEmbed: coordinates must be normalized to [0,1]");
#endif
    return ad::leaky_relu(proj.forward(rp), slope);
  }

  void collect(ParamSet& ps, const std::string& prefix) const { proj.collect(ps, prefix); }
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m, v;

  static AdamState init(const std::vector<Tensor>& params, AdamConfig cfg = {}) {
    AdamState st;
    st.cfg = cfg;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const Tensor& p : params) {
      st.m.emplace_back(p.size(), 0.0);
      st.v.emplace_back(p.size(), 0.0);
    }
    return st;
  }
};

/// One bias-corrected Adam update. Undefined grads (inputs unreachable from
/// the loss) count as zero.
inline void adam_step(const std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                      AdamState& st) {
  if (params.size() != grads.size() || params.size() != st.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  st.step += 1;
  const double c1 = 1.0 - std::pow(st.cfg.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.cfg.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<double> x = params[i].values();
    auto& mi = st.m[i];
    auto& vi = st.v[i];
    if (grads[i].defined() && grads[i].size() != static_cast<int>(x.size()))
      throw ad::ShapeError("adam_step: gradient shape mismatch at parameter " + std::to_string(i));
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double g = grads[i].defined() ? grads[i].values()[j] : 0.0;
      if (!std::isfinite(g))
        throw ad::NumericError("adam_step: non-finite gradient at parameter " + std::to_string(i) +
                               " element " + std::to_string(j));
      mi[j] = st.cfg.beta1 * mi[j] + (1.0 - st.cfg.beta1) * g;
      vi[j] = st.cfg.beta2 * vi[j] + (1.0 - st.cfg.beta2) * g * g;
      x[j] -= st.cfg.lr * (mi[j] / c1) / (std::sqrt(vi[j] / c2) + st.cfg.eps);
    }
    params[i].set_values(x);
  }
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

namespace detail {
constexpr char kCheckpointMagic[4] = {'R', 'M', 'N', 'N'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}
}  // namespace detail

/// Writes named tensors to a flat binary file; the round trip is bit-exact.
inline void save_checkpoint(const ParamSet& ps, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(detail::kCheckpointMagic, 4);
  detail::write_pod(os, detail::kCheckpointVersion);
  detail::write_pod(os, static_cast<std::uint64_t>(ps.size()));
  for (const auto& [name, t] : ps.items()) {
    detail::write_pod(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_pod(os, static_cast<std::uint32_t>(t.shape().size()));
    for (int d : t.shape()) detail::write_pod(os, static_cast<std::int64_t>(d));
    os.write(reinterpret_cast<const char*>(t.values().data()),
             static_cast<std::streamsize>(t.values().size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

/// Loads values into an existing ParamSet; names and shapes must match.
inline void load_checkpoint(ParamSet& ps, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, detail::kCheckpointMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  if (detail::read_pod<std::uint32_t>(is) != detail::kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version in " + path);
  const auto count = detail::read_pod<std::uint64_t>(is);
  if (count != ps.size())
    throw std::runtime_error("checkpoint: expected " + std::to_string(ps.size()) +
                             " tensors, file has " + std::to_string(count));
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name_len = detail::read_pod<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto ndim = detail::read_pod<std::uint32_t>(is);
    Shape shape(ndim);
    for (auto& d : shape) d = static_cast<int>(detail::read_pod<std::int64_t>(is));
    std::vector<double> vals(ad::numel(shape));
    is.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated file " + path);
    if (!ps.has(name)) throw std::runtime_error("checkpoint: unknown tensor " + name);
    const Tensor& t = ps.at(name);
    if (t.shape() != shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + name + ": model " +
                               ad::shape_str(t.shape()) + " vs file " + ad::shape_str(shape));
    t.set_values(vals);
  }
}

}  // namespace radiomap::nn
