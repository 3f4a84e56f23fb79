#pragma once

// Online-phase position estimation: kNN matching against per-RP centroid
// fingerprints, and a small learned regressor from RSS to coordinates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "radiomap/comgan.hpp"
#include "radiomap/dataset.hpp"
#include "radiomap/geometry.hpp"
#include "radiomap/nn.hpp"
#include "radiomap/rng.hpp"

namespace radiomap::loc {

using ad::Tensor;

namespace detail {

struct Centroids {
  std::vector<int> rp_ids;         // ascending
  std::vector<Vec2> coords;
  std::vector<double> fingerprints;  // rp x L, mean over that RP's samples
};

inline Centroids per_rp_centroids(const data::FingerprintDatabase& db) {
  Centroids c;
  c.rp_ids = db.rp_ids();
  const int L = db.ru_count;
  c.coords.reserve(c.rp_ids.size());
  c.fingerprints.assign(c.rp_ids.size() * static_cast<std::size_t>(L), 0.0);
  for (std::size_t r = 0; r < c.rp_ids.size(); ++r) {
    const int id = c.rp_ids[r];
    c.coords.push_back(db.rp_coords.at(id));
    std::vector<int> counts(L, 0);
    for (int s = 0; s < db.rows(); ++s) {
      if (db.rp_index[s] != id) continue;
      for (int l = 0; l < L; ++l)
        if (db.mask_at(s, l)) {
          c.fingerprints[r * L + l] += db.at(s, l);
          ++counts[l];
        }
    }
    for (int l = 0; l < L; ++l)
      if (counts[l] > 0) c.fingerprints[r * L + l] /= counts[l];
  }
  return c;
}

}  // namespace detail

/// Mean coordinate of the k RPs whose centroid fingerprints are nearest to
/// the query in Euclidean RSS distance; ties break toward the lower RP id.
inline Vec2 knn_localize(const data::FingerprintDatabase& db, const std::vector<double>& query,
                         int k) {
  db.validate();
  const int L = db.ru_count;
  if (static_cast<int>(query.size()) != L)
    throw std::invalid_argument("knn_localize: query has " + std::to_string(query.size()) +
                                " entries, database has " + std::to_string(L) + " RUs");
  const auto cents = detail::per_rp_centroids(db);
  const int R = static_cast<int>(cents.rp_ids.size());
  if (k < 1 || k > R)
    throw std::invalid_argument("knn_localize: k must be in [1, " + std::to_string(R) + "]");

  std::vector<std::pair<double, int>> ranked(R);  // (squared distance, rp position)
  for (int r = 0; r < R; ++r) {
    double d2 = 0.0;
    for (int l = 0; l < L; ++l) {
      const double d = cents.fingerprints[static_cast<std::size_t>(r) * L + l] - query[l];
      d2 += d * d;
    }
    ranked[r] = {d2, r};
  }
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return cents.rp_ids[a.second] < cents.rp_ids[b.second];
  });

  Vec2 est{0.0, 0.0};
  for (int i = 0; i < k; ++i) {
    est.x += cents.coords[ranked[i].second].x;
    est.y += cents.coords[ranked[i].second].y;
  }
  est.x /= k;
  est.y /= k;
  return est;
}

// ---------------------------------------------------------------------------
// learned localizer
// ---------------------------------------------------------------------------

struct LearnedConfig {
  std::vector<int> conv_widths{16, 32};
  int fc = 64;
  int kernel = 3;
  double leaky_slope = 0.2;
  bool batchnorm = true;
  int epochs = 300;
  double lr = 1e-3;
  int batch = 32;
  std::uint64_t seed = 0;
};

struct LearnedNet {
  int ru_count = 0;
  LearnedConfig cfg;
  std::vector<comgan::ConvBlock> blocks;
  nn::Linear fc1;  // last_width*L -> fc
  nn::Linear fc2;  // fc -> 2 (normalized coordinates)

  static LearnedNet init(int ru_count, const LearnedConfig& cfg, Rng& rng) {
    LearnedNet n;
    n.ru_count = ru_count;
    n.cfg = cfg;
    int in_ch = 1;
    for (int w : cfg.conv_widths) {
      n.blocks.push_back(
          comgan::ConvBlock::init(in_ch, w, cfg.kernel, cfg.batchnorm, cfg.leaky_slope, rng));
      in_ch = w;
    }
    n.fc1 = nn::Linear::init(cfg.conv_widths.back() * ru_count, cfg.fc, rng, cfg.leaky_slope);
    n.fc2 = nn::Linear::init(cfg.fc, 2, rng, cfg.leaky_slope);
    return n;
  }

  Tensor forward(const Tensor& rss_std, bool train) {
    const int batch = rss_std.shape()[0];
    Tensor x = ad::reshape(rss_std, {batch, 1, ru_count});
    for (auto& b : blocks) x = b.forward(x, train);
    Tensor flat = ad::reshape(x, {batch, cfg.conv_widths.back() * ru_count});
    return fc2.forward(ad::leaky_relu(fc1.forward(flat), cfg.leaky_slope));
  }

  void collect(nn::ParamSet& ps, const std::string& prefix = "loc") const {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].collect(ps, prefix + ".block" + std::to_string(i));
    fc1.collect(ps, prefix + ".fc1");
    fc2.collect(ps, prefix + ".fc2");
  }
  void collect_state(nn::ParamSet& ps, const std::string& prefix = "loc") const {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].collect_state(ps, prefix + ".block" + std::to_string(i));
  }
};

/// Either a kNN matcher over a stored database or a trained regression net.
/// localize() takes raw-dB queries in both cases.
struct LocalizerModel {
  enum class Kind { knn, learned };
  Kind kind = Kind::knn;

  // knn
  data::FingerprintDatabase db;
  int k = 3;

  // learned
  LearnedNet net;
  data::StandardizationStats stats;
  std::vector<double> loss_history;  // per-epoch training MSE

  CoordMap coords;  // used for clamping (knn) and denormalization (learned)
  bool trained = false;
};

inline LocalizerModel make_knn(const data::FingerprintDatabase& db_raw, int k,
                               const CoordMap& coords) {
  LocalizerModel m;
  m.kind = LocalizerModel::Kind::knn;
  m.db = db_raw;
  m.k = k;
  m.coords = coords;
  m.trained = true;
  return m;
}

/// Supervised coordinate regression with Adam on standardized inputs and
/// normalized targets. Deterministic per seed.
inline LocalizerModel train_localizer(const data::FingerprintDatabase& db_raw,
                                      const data::StandardizationStats& stats,
                                      const CoordMap& coords, const LearnedConfig& cfg) {
  db_raw.validate();
  const int L = db_raw.ru_count;
  const auto db = data::transform(db_raw, stats, data::Direction::forward);

  LocalizerModel m;
  m.kind = LocalizerModel::Kind::learned;
  m.stats = stats;
  m.coords = coords;
  Rng init_rng(derive_seed(cfg.seed, "loc.init"));
  m.net = LearnedNet::init(L, cfg, init_rng);

  nn::ParamSet ps;
  m.net.collect(ps);
  const auto tensors = ps.tensors();
  auto opt = nn::AdamState::init(tensors, {cfg.lr});

  Rng order_rng(derive_seed(cfg.seed, "loc.order"));
  std::vector<int> order(db.rows());
  for (int i = 0; i < db.rows(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    int steps = 0;
    for (int start = 0; start < db.rows(); start += cfg.batch) {
      const int count = std::min(cfg.batch, db.rows() - start);
      if (count < 2) continue;
      std::vector<double> x(static_cast<std::size_t>(count) * L);
      std::vector<double> y(static_cast<std::size_t>(count) * 2);
      for (int i = 0; i < count; ++i) {
        const int s = order[start + i];
        const auto row = db.row(s);
        std::copy(row.begin(), row.end(), x.begin() + static_cast<std::size_t>(i) * L);
        const Vec2 c = coords.normalize(db.coord_of_row(s));
        y[i * 2] = c.x;
        y[i * 2 + 1] = c.y;
      }
      const Tensor pred = m.net.forward(Tensor::leaf({count, L}, std::move(x)), true);
      const Tensor loss = ad::mse(pred, Tensor::leaf({count, 2}, std::move(y)));
      if (!std::isfinite(loss.item()))
        throw ad::NumericError("train_localizer: non-finite loss at epoch " +
                               std::to_string(epoch));
      nn::adam_step(tensors, ad::grad(loss, tensors), opt);
      epoch_loss += loss.item();
      ++steps;
    }
    m.loss_history.push_back(steps ? epoch_loss / steps : 0.0);
  }
  m.trained = true;
  return m;
}

namespace detail {
inline Vec2 clamp_to_scene(const Vec2& p, const Rect& area, double margin) {
  return {std::clamp(p.x, area.x0 - margin, area.x0 + area.width + margin),
          std::clamp(p.y, area.y0 - margin, area.y0 + area.height + margin)};
}
}  // namespace detail

/// Batched localization; rows of raw-dB queries to positions in meters.
/// Estimates are clamped to the scene bounds expanded by one grid cell.
inline std::vector<Vec2> localize_batch(const LocalizerModel& m,
                                        const std::vector<std::vector<double>>& queries,
                                        double grid_spacing = 1.0) {
  if (!m.trained) throw std::logic_error("localize: model not trained/configured");
  std::vector<Vec2> out;
  out.reserve(queries.size());
  if (m.kind == LocalizerModel::Kind::knn) {
    for (const auto& q : queries)
      out.push_back(detail::clamp_to_scene(knn_localize(m.db, q, m.k), m.coords.area, grid_spacing));
    return out;
  }
  const int L = m.net.ru_count;
  auto& net = const_cast<LearnedNet&>(m.net);  // eval-mode forward; no buffer updates
  constexpr int kChunk = 512;
  for (std::size_t start = 0; start < queries.size(); start += kChunk) {
    const int count = static_cast<int>(std::min<std::size_t>(kChunk, queries.size() - start));
    std::vector<double> x(static_cast<std::size_t>(count) * L);
    for (int i = 0; i < count; ++i) {
      const auto& q = queries[start + i];
      if (static_cast<int>(q.size()) != L)
        throw std::invalid_argument("localize: query has " + std::to_string(q.size()) +
                                    " entries, model expects " + std::to_string(L));
      for (int l = 0; l < L; ++l)
        x[static_cast<std::size_t>(i) * L + l] = m.stats.forward_value(l, q[l]);
    }
    const Tensor pred = net.forward(Tensor::leaf({count, L}, std::move(x)), false);
    for (int i = 0; i < count; ++i) {
      const Vec2 norm{pred.values()[i * 2], pred.values()[i * 2 + 1]};
      // denormalize without the [0,1] clamp, then clamp to bounds + one cell
      const Vec2 meters{m.coords.area.x0 + norm.x * m.coords.area.width,
                        m.coords.area.y0 + norm.y * m.coords.area.height};
      out.push_back(detail::clamp_to_scene(meters, m.coords.area, grid_spacing));
    }
  }
  return out;
}

inline Vec2 localize(const LocalizerModel& m, const std::vector<double>& query,
                     double grid_spacing = 1.0) {
  return localize_batch(m, {query}, grid_spacing)[0];
}

}  // namespace radiomap::loc
