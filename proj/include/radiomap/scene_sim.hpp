#pragma once

// Synthetic localization scenes: a log-distance propagation model with
// additive Gaussian noise and Bernoulli-gated NLoS attenuation, a reference
// grid, and fingerprint database generation.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "radiomap/dataset.hpp"
#include "radiomap/geometry.hpp"
#include "radiomap/rng.hpp"

namespace radiomap::sim {

struct ReferencePoint {
  int index = 0;
  Vec2 coord;
};

struct NlosSpec {
  double prob = 0.0;
  std::vector<double> attenuation_db;  // per RU; single entry broadcasts; empty = 0 dB

  double attenuation(int ru) const {
    if (attenuation_db.empty()) return 0.0;
    return attenuation_db.size() == 1 ? attenuation_db[0] : attenuation_db.at(ru);
  }
};

struct Scene {
  std::vector<Vec2> ru_positions;
  Rect area_bounds;
  double grid_spacing = 1.0;        // epsilon, meters
  double path_loss_exponent = 3.5;  // alpha
  double tx_offset = 0.0;           // beta, dB; absorbs transmit power and gains
  double noise_std = 0.0;           // sigma, dB
  NlosSpec nlos;
  std::uint64_t seed = 0;

  int ru_count() const { return static_cast<int>(ru_positions.size()); }

  void validate() const {
    if (ru_count() < 2) throw std::invalid_argument("Scene: need at least 2 RUs");
    if (grid_spacing <= 0) throw std::invalid_argument("Scene: grid_spacing must be positive");
    if (path_loss_exponent <= 0)
      throw std::invalid_argument("Scene: path_loss_exponent must be positive");
    if (noise_std < 0) throw std::invalid_argument("Scene: noise_std must be non-negative");
    if (area_bounds.width <= 0 || area_bounds.height <= 0)
      throw std::invalid_argument("Scene: degenerate area bounds");
    if (nlos.prob < 0 || nlos.prob > 1)
      throw std::invalid_argument("Scene: nlos.prob must be in [0,1]");
    if (nlos.attenuation_db.size() > 1 &&
        nlos.attenuation_db.size() != static_cast<std::size_t>(ru_count()))
      throw std::invalid_argument("Scene: nlos.attenuation_db must have 1 or ru_count entries");
    for (const auto& p : ru_positions)
      if (!area_bounds.contains(p))
        throw std::invalid_argument("Scene: RU position outside area bounds");
  }

  /// NLoS state of an (RP, RU) pair: a fixed property of the scene, so every
  /// sample drawn at that pair sees the same attenuation.
  bool nlos_gate(int rp_index, int ru) const {
    if (nlos.prob <= 0.0) return false;
    const std::uint64_t h = radiomap::detail::splitmix64(
        seed ^ (static_cast<std::uint64_t>(rp_index) * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL) ^
        (static_cast<std::uint64_t>(ru) + 0x2545F4914F6CDD1DULL));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return u < nlos.prob;
  }
};

/// Noise-free RSS at point p from RU l: beta - alpha * ln(d).
inline double rss_mean(const Vec2& p, int ru, const Scene& scene) {
  const double d = distance(p, scene.ru_positions.at(ru));
  if (d <= 0.0)
    throw std::domain_error("rss_mean: zero distance to RU " + std::to_string(ru) +
                            " (log singularity)");
  return scene.tx_offset - scene.path_loss_exponent * std::log(d);
}

/// One noisy observation with an explicit NLoS state.
inline double sample_rss(const Vec2& p, int ru, const Scene& scene, Rng& rng, bool nlos_active) {
  double v = rss_mean(p, ru, scene);
  if (scene.noise_std > 0.0) v += rng.normal(0.0, scene.noise_std);
  if (nlos_active) v -= scene.nlos.attenuation(ru);
  return v;
}

/// One noisy observation; the NLoS gate is drawn from rng per call.
inline double sample_rss(const Vec2& p, int ru, const Scene& scene, Rng& rng) {
  const bool gate = scene.nlos.prob > 0.0 && rng.bernoulli(scene.nlos.prob);
  return sample_rss(p, ru, scene, rng, gate);
}

/// Grid-cell centers covering the bounds, row-major (x fastest).
inline std::vector<ReferencePoint> generate_grid(const Rect& bounds, double eps) {
  if (eps <= 0) throw std::invalid_argument("generate_grid: spacing must be positive");
  if (bounds.width <= 0 || bounds.height <= 0)
    throw std::invalid_argument("generate_grid: degenerate bounds");
  const int nx = static_cast<int>(std::floor(bounds.width / eps + 1e-9));
  const int ny = static_cast<int>(std::floor(bounds.height / eps + 1e-9));
  if (nx < 1 || ny < 1)
    throw std::invalid_argument("generate_grid: spacing " + std::to_string(eps) +
                                " exceeds a bound dimension (empty grid)");
  std::vector<ReferencePoint> rps;
  rps.reserve(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      rps.push_back({iy * nx + ix,
                     {bounds.x0 + (ix + 0.5) * eps, bounds.y0 + (iy + 0.5) * eps}});
  return rps;
}

/// Draws samples_per_rp observations of every RU at every grid RP. NLoS
/// states come from the scene's per-pair gates; noise from rng.
inline data::FingerprintDatabase build_database(const Scene& scene, int samples_per_rp, Rng& rng) {
  scene.validate();
  if (samples_per_rp < 1)
    throw std::invalid_argument("build_database: samples_per_rp must be >= 1");
  const auto rps = generate_grid(scene.area_bounds, scene.grid_spacing);
  const int L = scene.ru_count();

  data::FingerprintDatabase db;
  db.ru_count = L;
  db.samples.reserve(static_cast<std::size_t>(rps.size()) * samples_per_rp * L);
  for (const auto& rp : rps) {
    db.rp_coords[rp.index] = rp.coord;
    std::vector<char> gates(L);
    for (int l = 0; l < L; ++l) gates[l] = scene.nlos_gate(rp.index, l);
    for (int n = 0; n < samples_per_rp; ++n) {
      for (int l = 0; l < L; ++l)
        db.samples.push_back(sample_rss(rp.coord, l, scene, rng, gates[l]));
      db.rp_index.push_back(rp.index);
    }
  }
  db.mask.assign(db.samples.size(), 1);
  db.validate();
  return db;
}

/// n points evenly spaced along the rectangle perimeter, starting at the
/// lower-left corner and walking counter-clockwise.
inline std::vector<Vec2> perimeter_positions(const Rect& r, int n) {
  const double per = 2.0 * (r.width + r.height);
  std::vector<Vec2> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    double t = per * i / n;
    Vec2 p;
    if (t < r.width) {
      p = {r.x0 + t, r.y0};
    } else if ((t -= r.width) < r.height) {
      p = {r.x0 + r.width, r.y0 + t};
    } else if ((t -= r.height) < r.width) {
      p = {r.x0 + r.width - t, r.y0 + r.height};
    } else {
      p = {r.x0, r.y0 + r.height - (t - r.width)};
    }
    out.push_back(p);
  }
  return out;
}

/// The stock synthetic scene: a 10 m x 4 m room on a 1 m grid (40 RPs) with
/// six RUs evenly deployed on the perimeter, moderate noise, and sparse
/// fixed NLoS attenuation.
inline Scene default_scene() {
  Scene s;
  s.area_bounds = {0.0, 0.0, 10.0, 4.0};
  s.grid_spacing = 1.0;
  s.ru_positions = perimeter_positions(s.area_bounds, 6);
  s.path_loss_exponent = 3.5;
  s.tx_offset = -20.0;
  s.noise_std = 1.2;
  s.nlos.prob = 0.15;
  s.nlos.attenuation_db = {5.0};
  s.seed = 7;
  return s;
}

// ---------------------------------------------------------------------------
// scene files
// ---------------------------------------------------------------------------

namespace detail {
inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw std::invalid_argument(where + ": unknown key \"" + key + "\"");
  }
}
}  // namespace detail

inline nlohmann::ordered_json scene_to_json(const Scene& s) {
  nlohmann::ordered_json j;
  auto rus = nlohmann::ordered_json::array();
  for (const auto& p : s.ru_positions) rus.push_back({p.x, p.y});
  j["ru_positions"] = rus;
  j["area_bounds"] = {{"x0", s.area_bounds.x0},
                      {"y0", s.area_bounds.y0},
                      {"width", s.area_bounds.width},
                      {"height", s.area_bounds.height}};
  j["grid_spacing"] = s.grid_spacing;
  j["alpha"] = s.path_loss_exponent;
  j["tx_offset"] = s.tx_offset;
  j["noise_std"] = s.noise_std;
  j["nlos"] = {{"prob", s.nlos.prob}, {"attenuation_db", s.nlos.attenuation_db}};
  j["seed"] = s.seed;
  return j;
}

inline Scene scene_from_json(const nlohmann::json& j, const std::string& where = "scene") {
  detail::check_keys(j, {"ru_positions", "area_bounds", "grid_spacing", "alpha", "tx_offset",
                         "noise_std", "nlos", "seed"},
                     where);
  Scene s;
  for (const auto& p : j.at("ru_positions")) {
    if (!p.is_array() || p.size() != 2)
      throw std::invalid_argument(where + ".ru_positions: entries must be [x, y]");
    s.ru_positions.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  const auto& b = j.at("area_bounds");
  detail::check_keys(b, {"x0", "y0", "width", "height"}, where + ".area_bounds");
  s.area_bounds = {b.at("x0").get<double>(), b.at("y0").get<double>(),
                   b.at("width").get<double>(), b.at("height").get<double>()};
  s.grid_spacing = j.at("grid_spacing").get<double>();
  s.path_loss_exponent = j.at("alpha").get<double>();
  s.tx_offset = j.value("tx_offset", 0.0);
  s.noise_std = j.value("noise_std", 0.0);
  if (j.contains("nlos")) {
    const auto& n = j.at("nlos");
    detail::check_keys(n, {"prob", "attenuation_db"}, where + ".nlos");
    s.nlos.prob = n.value("prob", 0.0);
    if (n.contains("attenuation_db")) {
      if (n.at("attenuation_db").is_number())
        s.nlos.attenuation_db = {n.at("attenuation_db").get<double>()};
      else
        s.nlos.attenuation_db = n.at("attenuation_db").get<std::vector<double>>();
    }
  }
  s.seed = j.value("seed", 0ULL);
  s.validate();
  return s;
}

inline Scene load_scene(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_scene: cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw data::ParseError(path + ": " + e.what());
  }
  try {
    return scene_from_json(j);
  } catch (const std::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

inline void save_scene(const Scene& s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_scene: cannot open " + path);
  os << scene_to_json(s).dump(2) << "\n";
}

}  // namespace radiomap::sim
