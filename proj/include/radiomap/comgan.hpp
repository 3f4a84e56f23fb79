#pragma once

// Feature-guided adversarial completer: generator/critic pair, Wasserstein
// loss with gradient penalty, auxiliary RP-consistency regularization, L1
// reconstruction term, and the alternating training loop.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "radiomap/dataset.hpp"
#include "radiomap/geometry.hpp"
#include "radiomap/nn.hpp"
#include "radiomap/rng.hpp"

namespace radiomap::comgan {

using ad::Tensor;

struct GeneratorConfig {
  std::vector<int> conv_widths{16, 64, 128, 64, 16};
  int trunk_fc = 96;
  int kernel = 3;
  double leaky_slope = 0.2;
  bool batchnorm = true;

  void validate() const {
    if (conv_widths.empty()) throw std::invalid_argument("GeneratorConfig: need conv widths");
    for (int w : conv_widths)
      if (w <= 0) throw std::invalid_argument("GeneratorConfig: widths must be positive");
    if (trunk_fc <= 0) throw std::invalid_argument("GeneratorConfig: trunk_fc must be positive");
  }
};

struct CriticConfig {
  std::vector<int> conv_widths{16, 64, 128};
  int aux_hidden = 8;
  int kernel = 3;
  double leaky_slope = 0.2;
  bool batchnorm = false;  // per-sample gradient penalty and batch coupling do not mix

  void validate() const {
    if (conv_widths.empty()) throw std::invalid_argument("CriticConfig: need conv widths");
    for (int w : conv_widths)
      if (w <= 0) throw std::invalid_argument("CriticConfig: widths must be positive");
    if (aux_hidden <= 0) throw std::invalid_argument("CriticConfig: aux_hidden must be positive");
  }
};

struct TrainConfig {
  double lambda_gp = 10.0;   // gradient penalty weight
  double lambda_rp = 1.0;    // RP-consistency MSE weight; 0 gives the lite variant
  double lambda_l1 = 100.0;  // element-wise reconstruction weight
  double lr = 1e-4;
  int n_critic = 5;  // critic updates per generator update
  int batch = 64;
  int epochs = 0;
  std::uint64_t seed = 0;
  int keep = 1;  // measured RUs per masked training input
  int checkpoint_every = 0;  // epochs; 0 disables
  std::string checkpoint_dir;

  void validate(int ru_count) const {
    if (lambda_gp < 0 || lambda_rp < 0 || lambda_l1 < 0)
      throw std::invalid_argument("TrainConfig: loss weights must be non-negative");
    if (n_critic < 1) throw std::invalid_argument("TrainConfig: n_critic must be >= 1");
    if (batch < 2) throw std::invalid_argument("TrainConfig: batch must be >= 2");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (keep < 1 || keep >= ru_count)
      throw std::invalid_argument("TrainConfig: keep must be in [1, ru_count)");
  }
};

// ---------------------------------------------------------------------------
// networks
// ---------------------------------------------------------------------------

struct ConvBlock {
  nn::Conv1d conv;
  nn::BatchNorm bn;
  bool use_bn = true;
  double slope = nn::kDefaultLeakySlope;

  static ConvBlock init(int in_ch, int out_ch, int kernel, bool use_bn, double slope, Rng& rng) {
    ConvBlock b;
    b.conv = nn::Conv1d::init(in_ch, out_ch, kernel, rng, slope);
    if (use_bn) b.bn = nn::BatchNorm::init(out_ch);
    b.use_bn = use_bn;
    b.slope = slope;
    return b;
  }

  Tensor forward(const Tensor& x, bool train) {
    Tensor y = conv.forward(x);
    if (use_bn) y = bn.forward(y, train);
    return ad::leaky_relu(y, slope);
  }

  void collect(nn::ParamSet& ps, const std::string& prefix) const {
    conv.collect(ps, prefix + ".conv");
    if (use_bn) bn.collect(ps, prefix + ".bn");
  }
  void collect_state(nn::ParamSet& ps, const std::string& prefix) const {
    if (use_bn) bn.collect_state(ps, prefix + ".bn");
  }
};

/// Completion network: masked RSS and an embedded RP coordinate in, a full
/// standardized RSS vector out. Additive skip connections join the
/// width-matched convolution blocks (first-to-last, second-to-fourth).
struct Generator {
  int ru_count = 0;
  GeneratorConfig cfg;
  nn::CoordEmbed embed;  // 2 -> L
  nn::Linear fc_in;      // 2L -> L
  std::vector<ConvBlock> blocks;
  nn::Linear fc_trunk;  // last_width*L -> trunk_fc
  nn::Linear fc_out;    // trunk_fc -> L

  static Generator init(int ru_count, const GeneratorConfig& cfg, Rng& rng) {
    cfg.validate();
    Generator g;
    g.ru_count = ru_count;
    g.cfg = cfg;
    g.embed = nn::CoordEmbed::init(ru_count, rng, cfg.leaky_slope);
    g.fc_in = nn::Linear::init(2 * ru_count, ru_count, rng, cfg.leaky_slope);
    int in_ch = 1;
    for (int w : cfg.conv_widths) {
      g.blocks.push_back(ConvBlock::init(in_ch, w, cfg.kernel, cfg.batchnorm, cfg.leaky_slope, rng));
      in_ch = w;
    }
    g.fc_trunk = nn::Linear::init(cfg.conv_widths.back() * ru_count, cfg.trunk_fc, rng,
                                  cfg.leaky_slope);
    g.fc_out = nn::Linear::init(cfg.trunk_fc, ru_count, rng, cfg.leaky_slope);
    return g;
  }

  /// masked_rss [batch, L] standardized with zeros at missing entries;
  /// rp [batch, 2] normalized coordinates.
  Tensor forward(const Tensor& masked_rss, const Tensor& rp, bool train) {
    const auto& s = masked_rss.shape();
    if (s.size() != 2 || s[1] != ru_count)
      throw ad::ShapeError("Generator: expected [batch," + std::to_string(ru_count) + "], got " +
                           ad::shape_str(s));
    const int batch = s[0];
    if (rp.shape() != ad::Shape{batch, 2})
      throw ad::ShapeError("Generator: rp must be [batch,2], got " + ad::shape_str(rp.shape()));

    Tensor h = ad::concat_cols(masked_rss, embed.forward(rp));
    h = ad::leaky_relu(fc_in.forward(h), cfg.leaky_slope);
    Tensor x = ad::reshape(h, {batch, 1, ru_count});

    std::vector<Tensor> outs;
    const int n = static_cast<int>(blocks.size());
    for (int i = 0; i < n; ++i) {
      x = blocks[i].forward(x, train);
      const int partner = n - 1 - i;
      if (partner >= 0 && partner < i && cfg.conv_widths[partner] == cfg.conv_widths[i])
        x = ad::add_same(x, outs[partner]);
      outs.push_back(x);
    }

    Tensor flat = ad::reshape(x, {batch, cfg.conv_widths.back() * ru_count});
    Tensor t = ad::leaky_relu(fc_trunk.forward(flat), cfg.leaky_slope);
    return fc_out.forward(t);
  }

  void collect(nn::ParamSet& ps, const std::string& prefix = "gen") const {
    embed.collect(ps, prefix + ".embed");
    fc_in.collect(ps, prefix + ".fc_in");
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].collect(ps, prefix + ".block" + std::to_string(i));
    fc_trunk.collect(ps, prefix + ".fc_trunk");
    fc_out.collect(ps, prefix + ".fc_out");
  }
  void collect_state(nn::ParamSet& ps, const std::string& prefix = "gen") const {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].collect_state(ps, prefix + ".block" + std::to_string(i));
  }
};

/// Wasserstein critic with an auxiliary RP-regression branch. Emits an
/// unbounded authenticity score and a normalized coordinate estimate.
struct Critic {
  int ru_count = 0;
  CriticConfig cfg;
  std::vector<ConvBlock> blocks;
  nn::Linear score_head;  // last_width*L -> 1
  nn::Linear aux_fc1;     // last_width*L -> aux_hidden
  nn::Linear aux_fc2;     // aux_hidden -> 2

  struct Output {
    Tensor score;   // [batch, 1]
    Tensor rp_est;  // [batch, 2]
  };

  static Critic init(int ru_count, const CriticConfig& cfg, Rng& rng) {
    cfg.validate();
    Critic c;
    c.ru_count = ru_count;
    c.cfg = cfg;
    int in_ch = 1;
    for (int w : cfg.conv_widths) {
      c.blocks.push_back(ConvBlock::init(in_ch, w, cfg.kernel, cfg.batchnorm, cfg.leaky_slope, rng));
      in_ch = w;
    }
    const int flat = cfg.conv_widths.back() * ru_count;
    c.score_head = nn::Linear::init(flat, 1, rng, cfg.leaky_slope);
    c.aux_fc1 = nn::Linear::init(flat, cfg.aux_hidden, rng, cfg.leaky_slope);
    c.aux_fc2 = nn::Linear::init(cfg.aux_hidden, 2, rng, cfg.leaky_slope);
    return c;
  }

  Output forward(const Tensor& rss, bool train) {
    const auto& s = rss.shape();
    if (s.size() != 2 || s[1] != ru_count)
      throw ad::ShapeError("Critic: expected [batch," + std::to_string(ru_count) + "], got " +
                           ad::shape_str(s));
    const int batch = s[0];
    Tensor x = ad::reshape(rss, {batch, 1, ru_count});
    for (auto& b : blocks) x = b.forward(x, train);
    Tensor flat = ad::reshape(x, {batch, cfg.conv_widths.back() * ru_count});
    Tensor a = ad::leaky_relu(aux_fc1.forward(flat), cfg.leaky_slope);
    return {score_head.forward(flat), aux_fc2.forward(a)};
  }

  void collect(nn::ParamSet& ps, const std::string& prefix = "critic") const {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].collect(ps, prefix + ".block" + std::to_string(i));
    score_head.collect(ps, prefix + ".score");
    aux_fc1.collect(ps, prefix + ".aux_fc1");
    aux_fc2.collect(ps, prefix + ".aux_fc2");
  }
  void collect_state(nn::ParamSet& ps, const std::string& prefix = "critic") const {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].collect_state(ps, prefix + ".block" + std::to_string(i));
  }
};

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

/// E[(||d score / d x_hat||_2 - 1)^2] on per-row random interpolates of
/// real and fake. The inner gradient is a graph value, so the penalty is
/// differentiable with respect to the critic parameters.
inline Tensor gradient_penalty(Critic& critic, const Tensor& real, const Tensor& fake, Rng& rng) {
  if (real.shape() != fake.shape())
    throw ad::ShapeError("gradient_penalty: real " + ad::shape_str(real.shape()) + " vs fake " +
                         ad::shape_str(fake.shape()));
  const int batch = real.shape()[0];
  const int width = real.shape()[1];
  std::vector<double> uv(static_cast<std::size_t>(batch) * width);
  for (int b = 0; b < batch; ++b) {
    const double u = rng.uniform();
    for (int l = 0; l < width; ++l) uv[static_cast<std::size_t>(b) * width + l] = u;
  }
  std::vector<double> wv(uv.size());
  for (std::size_t i = 0; i < uv.size(); ++i) wv[i] = 1.0 - uv[i];
  const Tensor u = Tensor::leaf(real.shape(), std::move(uv));
  const Tensor w = Tensor::leaf(real.shape(), std::move(wv));
  const Tensor x_hat = ad::add_same(ad::mul_same(u, real), ad::mul_same(w, fake));

  const auto out = critic.forward(x_hat, false);
  const Tensor g = ad::grad(ad::sum(out.score), {x_hat})[0];
  const Tensor norms = ad::l2_norm_rows(g);
  const Tensor pen = ad::mean(ad::square(ad::add_const(norms, -1.0)));
  if (!std::isfinite(pen.item()))
    throw ad::NumericError("gradient_penalty: non-finite gradient norm");
  return pen;
}

struct CriticLossParts {
  Tensor total;
  Tensor adversarial;  // E[score(fake)] - E[score(real)]
  Tensor gp;
  Tensor aux_mse;  // undefined when lambda_rp == 0
};

/// Row i of `fake` must be generated from the masked copy of row i of
/// `real` so both auxiliary estimates refer to the same RP.
inline CriticLossParts critic_loss(Critic& critic, const Tensor& real, const Tensor& fake,
                                   const TrainConfig& cfg, Rng& rng, bool train = true) {
  if (real.shape() != fake.shape())
    throw ad::ShapeError("critic_loss: misaligned batches " + ad::shape_str(real.shape()) +
                         " vs " + ad::shape_str(fake.shape()));
  CriticLossParts parts;
  const auto out_real = critic.forward(real, train);
  const auto out_fake = critic.forward(fake, train);
  parts.adversarial = ad::sub(ad::mean(out_fake.score), ad::mean(out_real.score));
  parts.gp = gradient_penalty(critic, real, fake, rng);
  parts.total = ad::add_same(parts.adversarial, ad::scale(parts.gp, cfg.lambda_gp));
  if (cfg.lambda_rp > 0) {
    parts.aux_mse = ad::mse(out_real.rp_est, out_fake.rp_est);
    parts.total = ad::add_same(parts.total, ad::scale(parts.aux_mse, cfg.lambda_rp));
  }
  return parts;
}

struct GeneratorLossParts {
  Tensor total;
  Tensor adversarial;  // -E[score(fake)]
  Tensor aux_mse;      // undefined when lambda_rp == 0
  Tensor l1;
};

inline GeneratorLossParts generator_loss(Critic& critic, const Tensor& real, const Tensor& fake,
                                         const TrainConfig& cfg, bool train = true) {
  if (real.shape() != fake.shape())
    throw ad::ShapeError("generator_loss: misaligned batches " + ad::shape_str(real.shape()) +
                         " vs " + ad::shape_str(fake.shape()));
  GeneratorLossParts parts;
  const auto out_fake = critic.forward(fake, train);
  parts.adversarial = ad::neg(ad::mean(out_fake.score));
  parts.total = parts.adversarial;
  if (cfg.lambda_rp > 0) {
    const auto out_real = critic.forward(real, train);
    parts.aux_mse = ad::mse(out_real.rp_est, out_fake.rp_est);
    parts.total = ad::add_same(parts.total, ad::scale(parts.aux_mse, cfg.lambda_rp));
  }
  parts.l1 = ad::mae(fake, real);
  parts.total = ad::add_same(parts.total, ad::scale(parts.l1, cfg.lambda_l1));
  return parts;
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

struct EpochLog {
  double critic_total = 0, critic_adv = 0, critic_gp = 0, critic_aux = 0;
  double gen_total = 0, gen_adv = 0, gen_aux = 0, gen_l1 = 0;
};

struct TrainingError : std::runtime_error {
  int epochs_completed = 0;
  explicit TrainingError(const std::string& what, int epochs)
      : std::runtime_error(what), epochs_completed(epochs) {}
};

struct ComganParams {
  Generator gen;
  Critic critic;
  nn::AdamState opt_gen, opt_critic;
  std::vector<EpochLog> history;

  /// Everything needed to restore the model: trainables plus BN buffers.
  nn::ParamSet checkpoint_set() const {
    nn::ParamSet ps;
    gen.collect(ps);
    gen.collect_state(ps);
    critic.collect(ps);
    critic.collect_state(ps);
    return ps;
  }
};

namespace detail {

struct BatchTensors {
  Tensor real;    // [B, L]
  Tensor rp;      // [B, 2] normalized
  Tensor masked;  // [B, L]
};

inline BatchTensors make_batch(const data::FingerprintDatabase& db, const CoordMap& coords,
                               const std::vector<int>& order, int start, int count, int keep,
                               Rng& mask_rng) {
  const int L = db.ru_count;
  std::vector<double> real(static_cast<std::size_t>(count) * L);
  std::vector<double> rp(static_cast<std::size_t>(count) * 2);
  std::vector<double> masked(static_cast<std::size_t>(count) * L);
  for (int i = 0; i < count; ++i) {
    const int s = order[start + i];
    const auto row = db.row(s);
    std::copy(row.begin(), row.end(), real.begin() + static_cast<std::size_t>(i) * L);
    const Vec2 c = coords.normalize(db.coord_of_row(s));
    rp[i * 2] = c.x;
    rp[i * 2 + 1] = c.y;
    const auto [mrow, _] = data::apply_mask(row, keep, mask_rng);
    std::copy(mrow.begin(), mrow.end(), masked.begin() + static_cast<std::size_t>(i) * L);
  }
  return {Tensor::leaf({count, L}, std::move(real)), Tensor::leaf({count, 2}, std::move(rp)),
          Tensor::leaf({count, L}, std::move(masked))};
}

inline std::vector<std::vector<double>> snapshot_values(const std::vector<Tensor>& ts) {
  std::vector<std::vector<double>> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(t.values());
  return out;
}

inline void restore_values(const std::vector<Tensor>& ts,
                           const std::vector<std::vector<double>>& snap) {
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i].set_values(snap[i]);
}

}  // namespace detail

/// Alternating adversarial training: n_critic critic updates per generator
/// update, fresh masks per batch, fully seeded. The database must already be
/// standardized. On a non-finite loss the parameters are restored to the
/// last completed epoch and a TrainingError is thrown.
inline ComganParams train(const data::FingerprintDatabase& db_std, const CoordMap& coords,
                          const TrainConfig& cfg, const GeneratorConfig& gcfg = {},
                          const CriticConfig& ccfg = {}) {
  db_std.validate();
  const int L = db_std.ru_count;
  cfg.validate(L);

  Rng init_rng(derive_seed(cfg.seed, "comgan.init"));
  ComganParams P{Generator::init(L, gcfg, init_rng), Critic::init(L, ccfg, init_rng), {}, {}, {}};

  nn::ParamSet gen_ps, critic_ps;
  P.gen.collect(gen_ps);
  P.critic.collect(critic_ps);
  const auto gen_tensors = gen_ps.tensors();
  const auto critic_tensors = critic_ps.tensors();
  P.opt_gen = nn::AdamState::init(gen_tensors, {cfg.lr});
  P.opt_critic = nn::AdamState::init(critic_tensors, {cfg.lr});

  Rng order_rng(derive_seed(cfg.seed, "comgan.order"));
  Rng mask_rng(derive_seed(cfg.seed, "comgan.mask"));
  Rng gp_rng(derive_seed(cfg.seed, "comgan.gp"));

  const auto all_state = P.checkpoint_set().tensors();
  auto last_good = detail::snapshot_values(all_state);
  auto opt_snapshot_g = P.opt_gen;
  auto opt_snapshot_c = P.opt_critic;

  std::vector<int> order(db_std.rows());
  for (int i = 0; i < db_std.rows(); ++i) order[i] = i;

  const auto abort_training = [&](const std::string& why, int epoch) {
    detail::restore_values(all_state, last_good);
    P.opt_gen = opt_snapshot_g;
    P.opt_critic = opt_snapshot_c;
    std::string msg = "comgan::train: " + why + " at epoch " + std::to_string(epoch) +
                      "; parameters restored to last completed epoch";
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty())
      msg += " (checkpoints in " + cfg.checkpoint_dir + ")";
    throw TrainingError(msg, epoch);
  };

  int critic_step_count = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    EpochLog log;
    int csteps = 0, gsteps = 0;

    for (int start = 0; start < db_std.rows(); start += cfg.batch) {
      const int count = std::min(cfg.batch, db_std.rows() - start);
      if (count < 2) continue;  // batch statistics need at least two rows
      const auto batch = detail::make_batch(db_std, coords, order, start, count, cfg.keep, mask_rng);

      // critic update on a detached fake
      const Tensor fake_det = ad::detach(P.gen.forward(batch.masked, batch.rp, true));
      CriticLossParts cl;
      try {
        cl = critic_loss(P.critic, batch.real, fake_det, cfg, gp_rng);
        if (!std::isfinite(cl.total.item())) abort_training("non-finite critic loss", epoch);
        nn::adam_step(critic_tensors, ad::grad(cl.total, critic_tensors), P.opt_critic);
      } catch (const ad::NumericError& e) {
        abort_training(e.what(), epoch);
      }
      log.critic_total += cl.total.item();
      log.critic_adv += cl.adversarial.item();
      log.critic_gp += cl.gp.item();
      if (cl.aux_mse.defined()) log.critic_aux += cl.aux_mse.item();
      ++csteps;

      if (++critic_step_count % cfg.n_critic == 0) {
        const Tensor fake = P.gen.forward(batch.masked, batch.rp, true);
        GeneratorLossParts gl;
        try {
          gl = generator_loss(P.critic, batch.real, fake, cfg);
          if (!std::isfinite(gl.total.item())) abort_training("non-finite generator loss", epoch);
          nn::adam_step(gen_tensors, ad::grad(gl.total, gen_tensors), P.opt_gen);
        } catch (const ad::NumericError& e) {
          abort_training(e.what(), epoch);
        }
        log.gen_total += gl.total.item();
        log.gen_adv += gl.adversarial.item();
        if (gl.aux_mse.defined()) log.gen_aux += gl.aux_mse.item();
        log.gen_l1 += gl.l1.item();
        ++gsteps;
      }
    }

    if (csteps > 0) {
      log.critic_total /= csteps;
      log.critic_adv /= csteps;
      log.critic_gp /= csteps;
      log.critic_aux /= csteps;
    }
    if (gsteps > 0) {
      log.gen_total /= gsteps;
      log.gen_adv /= gsteps;
      log.gen_aux /= gsteps;
      log.gen_l1 /= gsteps;
    }
    P.history.push_back(log);

    last_good = detail::snapshot_values(all_state);
    opt_snapshot_g = P.opt_gen;
    opt_snapshot_c = P.opt_critic;

    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() &&
        (epoch + 1) % cfg.checkpoint_every == 0) {
      nn::save_checkpoint(P.checkpoint_set(),
                          cfg.checkpoint_dir + "/comgan_epoch_" + std::to_string(epoch + 1) +
                              ".ckpt");
    }
  }
  return P;
}

// ---------------------------------------------------------------------------
// completion
// ---------------------------------------------------------------------------

/// Trained generator bundled with the standardization statistics and
/// coordinate map needed to run it on raw measurements.
struct Completer {
  Generator gen;  // shares the trained parameter leaves
  data::StandardizationStats stats;
  CoordMap coords;

  Completer(const Generator& g, data::StandardizationStats st, const CoordMap& cm)
      : gen(g), stats(std::move(st)), coords(cm) {
    if (stats.ru_count() != gen.ru_count)
      throw std::invalid_argument("Completer: stats dimensionality does not match generator");
  }

  /// Standardized masked rows in, standardized predictions out.
  std::vector<double> predict_std(const std::vector<double>& masked_std,
                                  const std::vector<double>& rp_norm, int batch) const {
    const int L = gen.ru_count;
    auto& g = const_cast<Generator&>(gen);  // forward mutates only BN buffers in train mode
    const Tensor out = g.forward(Tensor::leaf({batch, L}, masked_std),
                                 Tensor::leaf({batch, 2}, rp_norm), false);
    return out.values();
  }

  /// Full raw-dB prediction for one measurement. Measured entries are NOT
  /// merged back here; subset aggregation owns that step.
  std::vector<double> complete(const std::vector<double>& rss_raw,
                               const std::vector<std::uint8_t>& mask, const Vec2& rp) const {
    const int L = gen.ru_count;
    if (static_cast<int>(rss_raw.size()) != L || static_cast<int>(mask.size()) != L)
      throw std::invalid_argument("Completer::complete: expected length-" + std::to_string(L) +
                                  " vector and mask");
    std::vector<double> masked_std(L, 0.0);
    for (int l = 0; l < L; ++l)
      if (mask[l]) masked_std[l] = stats.forward_value(l, rss_raw[l]);
    const Vec2 c = coords.normalize(rp);
    const auto out = predict_std(masked_std, {c.x, c.y}, 1);
    std::vector<double> raw(L);
    for (int l = 0; l < L; ++l) raw[l] = stats.inverse_value(l, out[l]);
    return raw;
  }
};

}  // namespace radiomap::comgan
