#pragma once

// Fingerprint database container, RP-disjoint splitting, masking,
// standardization, and CSV persistence.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "radiomap/geometry.hpp"
#include "radiomap/rng.hpp"

namespace radiomap::data {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sample matrix of RSS vectors with a per-entry measurement mask and
/// reference-point association. Immutable by convention after construction.
struct FingerprintDatabase {
  int ru_count = 0;
  std::vector<double> samples;      // rows x ru_count, row-major, dB
  std::vector<std::uint8_t> mask;   // rows x ru_count, 1 = measured
  std::vector<int> rp_index;        // per row
  std::map<int, Vec2> rp_coords;
  std::vector<char> provenance;     // rows x ru_count, 'M'/'P'; empty unless hybrid

  int rows() const { return static_cast<int>(rp_index.size()); }

  double at(int s, int l) const { return samples[static_cast<std::size_t>(s) * ru_count + l]; }
  std::uint8_t mask_at(int s, int l) const {
    return mask[static_cast<std::size_t>(s) * ru_count + l];
  }

  std::vector<double> row(int s) const {
    const auto* p = samples.data() + static_cast<std::size_t>(s) * ru_count;
    return {p, p + ru_count};
  }
  std::vector<std::uint8_t> mask_row(int s) const {
    const auto* p = mask.data() + static_cast<std::size_t>(s) * ru_count;
    return {p, p + ru_count};
  }

  Vec2 coord_of_row(int s) const { return rp_coords.at(rp_index[s]); }

  std::vector<int> rp_ids() const {
    std::set<int> ids(rp_index.begin(), rp_index.end());
    return {ids.begin(), ids.end()};
  }

  void validate() const {
    if (rows() < 1) throw std::invalid_argument("FingerprintDatabase: empty database");
    if (ru_count < 1) throw std::invalid_argument("FingerprintDatabase: ru_count must be >= 1");
    const auto expected = static_cast<std::size_t>(rows()) * ru_count;
    if (samples.size() != expected || mask.size() != expected)
      throw std::invalid_argument("FingerprintDatabase: sample/mask sizes inconsistent with rows");
    for (std::uint8_t m : mask)
      if (m > 1) throw std::invalid_argument("FingerprintDatabase: mask entries must be 0 or 1");
    for (int id : rp_index)
      if (!rp_coords.count(id))
        throw std::invalid_argument("FingerprintDatabase: rp " + std::to_string(id) +
                                    " has no coordinate");
    if (!provenance.empty() && provenance.size() != expected)
      throw std::invalid_argument("FingerprintDatabase: provenance size mismatch");
  }
};

// ---------------------------------------------------------------------------
// splitting
// ---------------------------------------------------------------------------

struct SplitSpec {
  int rss_train = 0;
  int rss_test = 0;
  int loc_test = 0;
  std::uint64_t seed = 0;
};

struct Splits {
  FingerprintDatabase train;
  FingerprintDatabase test;
  FingerprintDatabase loc_test;
};

namespace detail {
inline FingerprintDatabase filter_by_rp(const FingerprintDatabase& db, const std::set<int>& keep) {
  FingerprintDatabase out;
  out.ru_count = db.ru_count;
  for (int s = 0; s < db.rows(); ++s) {
    if (!keep.count(db.rp_index[s])) continue;
    const auto r = db.row(s);
    const auto m = db.mask_row(s);
    out.samples.insert(out.samples.end(), r.begin(), r.end());
    out.mask.insert(out.mask.end(), m.begin(), m.end());
    out.rp_index.push_back(db.rp_index[s]);
    if (!db.provenance.empty()) {
      const auto* p = db.provenance.data() + static_cast<std::size_t>(s) * db.ru_count;
      out.provenance.insert(out.provenance.end(), p, p + db.ru_count);
    }
  }
  for (int id : keep) out.rp_coords[id] = db.rp_coords.at(id);
  return out;
}
}  // namespace detail

/// Partitions the database into three RP-disjoint splits covering all RPs.
inline Splits split_by_rp(const FingerprintDatabase& db, const SplitSpec& spec) {
  const auto ids = db.rp_ids();
  const int total = static_cast<int>(ids.size());
  if (spec.rss_train <= 0 || spec.rss_test <= 0 || spec.loc_test <= 0)
    throw std::invalid_argument("split_by_rp: all split counts must be positive");
  if (spec.rss_train + spec.rss_test + spec.loc_test != total)
    throw std::invalid_argument("split_by_rp: counts sum to " +
                                std::to_string(spec.rss_train + spec.rss_test + spec.loc_test) +
                                " but database has " + std::to_string(total) + " RPs");
  std::vector<int> shuffled = ids;
  Rng rng(spec.seed);
  rng.shuffle(shuffled);
  std::set<int> train_ids(shuffled.begin(), shuffled.begin() + spec.rss_train);
  std::set<int> test_ids(shuffled.begin() + spec.rss_train,
                         shuffled.begin() + spec.rss_train + spec.rss_test);
  std::set<int> loc_ids(shuffled.begin() + spec.rss_train + spec.rss_test, shuffled.end());
  return {detail::filter_by_rp(db, train_ids), detail::filter_by_rp(db, test_ids),
          detail::filter_by_rp(db, loc_ids)};
}

// ---------------------------------------------------------------------------
// masking
// ---------------------------------------------------------------------------

/// Keeps `keep` uniformly chosen entries and zeroes the rest (the masked
/// placeholder in standardized space). Returns the masked vector and mask.
inline std::pair<std::vector<double>, std::vector<std::uint8_t>> apply_mask(
    const std::vector<double>& sample, int keep, Rng& rng) {
  const int L = static_cast<int>(sample.size());
  if (keep < 1 || keep >= L)
    throw std::invalid_argument("apply_mask: keep must be in [1, " + std::to_string(L - 1) +
                                "], got " + std::to_string(keep));
  std::vector<double> masked(L, 0.0);
  std::vector<std::uint8_t> m(L, 0);
  for (int idx : rng.sample_without_replacement(L, keep)) {
    masked[idx] = sample[idx];
    m[idx] = 1;
  }
  return {std::move(masked), std::move(m)};
}

/// Database-wide column masking: only the listed RUs stay measured. Hidden
/// entries are zeroed and unmasked.
inline FingerprintDatabase mask_to_columns(const FingerprintDatabase& db,
                                           const std::vector<int>& rus) {
  if (rus.empty()) throw std::invalid_argument("mask_to_columns: need at least one RU");
  std::vector<std::uint8_t> keep(db.ru_count, 0);
  for (int ru : rus) {
    if (ru < 0 || ru >= db.ru_count)
      throw std::invalid_argument("mask_to_columns: RU " + std::to_string(ru) + " out of range");
    keep[ru] = 1;
  }
  FingerprintDatabase out = db;
  for (int s = 0; s < db.rows(); ++s)
    for (int l = 0; l < db.ru_count; ++l) {
      const auto idx = static_cast<std::size_t>(s) * db.ru_count + l;
      out.mask[idx] = keep[l] && db.mask[idx];
      if (!out.mask[idx]) out.samples[idx] = 0.0;
    }
  return out;
}

/// Database-wide per-sample random masking with `keep` kept entries per row.
inline FingerprintDatabase mask_random_keep(const FingerprintDatabase& db, int keep, Rng& rng) {
  FingerprintDatabase out = db;
  for (int s = 0; s < db.rows(); ++s) {
    const auto [masked, m] = apply_mask(db.row(s), keep, rng);
    for (int l = 0; l < db.ru_count; ++l) {
      const auto idx = static_cast<std::size_t>(s) * db.ru_count + l;
      out.samples[idx] = masked[l];
      out.mask[idx] = m[l];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// standardization
// ---------------------------------------------------------------------------

struct StandardizationStats {
  std::vector<double> means;        // per RU, dB
  std::vector<double> stds;         // per RU, dB, floored
  std::vector<std::uint8_t> flagged;  // 1 where the floor kicked in
  std::string split = "train";

  static constexpr double kStdFloor = 1e-6;

  int ru_count() const { return static_cast<int>(means.size()); }
  double forward_value(int l, double x) const { return (x - means[l]) / stds[l]; }
  double inverse_value(int l, double z) const { return z * stds[l] + means[l]; }
};

/// Per-RU mean and population std over measured entries only.
inline StandardizationStats fit_standardizer(const FingerprintDatabase& db) {
  StandardizationStats st;
  const int L = db.ru_count;
  st.means.resize(L);
  st.stds.resize(L);
  st.flagged.assign(L, 0);
  for (int l = 0; l < L; ++l) {
    double sum = 0.0;
    int n = 0;
    for (int s = 0; s < db.rows(); ++s)
      if (db.mask_at(s, l)) {
        sum += db.at(s, l);
        ++n;
      }
    if (n < 2)
      throw std::invalid_argument("fit_standardizer: RU " + std::to_string(l) + " has " +
                                  std::to_string(n) + " measured entries (need >= 2)");
    const double mu = sum / n;
    double ss = 0.0;
    for (int s = 0; s < db.rows(); ++s)
      if (db.mask_at(s, l)) {
        const double d = db.at(s, l) - mu;
        ss += d * d;
      }
    double sd = std::sqrt(ss / n);
    if (sd < StandardizationStats::kStdFloor) {
      sd = StandardizationStats::kStdFloor;
      st.flagged[l] = 1;
    }
    st.means[l] = mu;
    st.stds[l] = sd;
  }
  return st;
}

enum class Direction { forward, inverse };

/// Applies (x-mu)/sigma (forward) or its inverse to measured entries;
/// unmeasured entries become 0 either way.
inline FingerprintDatabase transform(const FingerprintDatabase& db,
                                     const StandardizationStats& stats, Direction dir) {
  if (stats.ru_count() != db.ru_count)
    throw std::invalid_argument("transform: stats have " + std::to_string(stats.ru_count()) +
                                " RUs, database has " + std::to_string(db.ru_count));
  FingerprintDatabase out = db;
  for (int s = 0; s < db.rows(); ++s)
    for (int l = 0; l < db.ru_count; ++l) {
      auto& v = out.samples[static_cast<std::size_t>(s) * db.ru_count + l];
      if (!db.mask_at(s, l)) {
        v = 0.0;
        continue;
      }
      v = (dir == Direction::forward) ? stats.forward_value(l, v) : stats.inverse_value(l, v);
    }
  return out;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/// CSV with header rp_id,x,y,rss_0..rss_{L-1},mask_0..mask_{L-1}
/// (plus provenance_0.. for hybrid databases). UTF-8, '.' decimal separator.
inline void save(const FingerprintDatabase& db, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save: cannot open " + path + " for writing");
  os << "rp_id,x,y";
  for (int l = 0; l < db.ru_count; ++l) os << ",rss_" << l;
  for (int l = 0; l < db.ru_count; ++l) os << ",mask_" << l;
  const bool prov = !db.provenance.empty();
  if (prov)
    for (int l = 0; l < db.ru_count; ++l) os << ",provenance_" << l;
  os << "\n";
  for (int s = 0; s < db.rows(); ++s) {
    const Vec2 c = db.coord_of_row(s);
    os << db.rp_index[s] << ',' << detail::fmt_double(c.x) << ',' << detail::fmt_double(c.y);
    for (int l = 0; l < db.ru_count; ++l) os << ',' << detail::fmt_double(db.at(s, l));
    for (int l = 0; l < db.ru_count; ++l) os << ',' << int(db.mask_at(s, l));
    if (prov)
      for (int l = 0; l < db.ru_count; ++l)
        os << ',' << db.provenance[static_cast<std::size_t>(s) * db.ru_count + l];
    os << "\n";
  }
  if (!os) throw std::runtime_error("save: write failed for " + path);
}

inline FingerprintDatabase load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw ParseError(path + ":1: empty file");
  const auto header = detail::split_line(line);
  if (header.size() < 5 || header[0] != "rp_id" || header[1] != "x" || header[2] != "y")
    throw ParseError(path + ":1: expected header starting with rp_id,x,y");
  int L = 0;
  std::size_t col = 3;
  while (col < header.size() && header[col] == "rss_" + std::to_string(L)) {
    ++L;
    ++col;
  }
  if (L == 0) throw ParseError(path + ":1: no rss_* columns");
  for (int l = 0; l < L; ++l, ++col)
    if (col >= header.size() || header[col] != "mask_" + std::to_string(l))
      throw ParseError(path + ":1: expected column mask_" + std::to_string(l));
  bool prov = false;
  if (col < header.size() && header[col] == "provenance_0") {
    prov = true;
    for (int l = 0; l < L; ++l, ++col)
      if (col >= header.size() || header[col] != "provenance_" + std::to_string(l))
        throw ParseError(path + ":1: expected column provenance_" + std::to_string(l));
  }
  if (col != header.size())
    throw ParseError(path + ":1: unknown column \"" + header[col] + "\"");

  FingerprintDatabase db;
  db.ru_count = L;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split_line(line);
    const auto where = path + ":" + std::to_string(lineno);
    if (f.size() != header.size())
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(f.size()));
    try {
      std::size_t i = 0;
      const int rp = std::stoi(f[i++]);
      const double x = std::stod(f[i++]);
      const double y = std::stod(f[i++]);
      for (int l = 0; l < L; ++l) db.samples.push_back(std::stod(f[i++]));
      for (int l = 0; l < L; ++l) {
        const int m = std::stoi(f[i++]);
        if (m != 0 && m != 1) throw ParseError(where + ": mask value must be 0 or 1");
        db.mask.push_back(static_cast<std::uint8_t>(m));
      }
      if (prov)
        for (int l = 0; l < L; ++l) {
          if (f[i] != "M" && f[i] != "P")
            throw ParseError(where + ": provenance value must be M or P");
          db.provenance.push_back(f[i++][0]);
        }
      db.rp_index.push_back(rp);
      const Vec2 c{x, y};
      auto it = db.rp_coords.find(rp);
      if (it == db.rp_coords.end())
        db.rp_coords[rp] = c;
      else if (std::abs(it->second.x - x) > 1e-9 || std::abs(it->second.y - y) > 1e-9)
        throw ParseError(where + ": inconsistent coordinates for rp " + std::to_string(rp));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  db.validate();
  return db;
}

inline void save_stats(const StandardizationStats& st, const std::string& path) {
  nlohmann::ordered_json j;
  j["means"] = st.means;
  j["stds"] = st.stds;
  j["split"] = st.split;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_stats: cannot open " + path);
  os << j.dump(2) << "\n";
}

inline StandardizationStats load_stats(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_stats: cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  StandardizationStats st;
  st.means = j.at("means").get<std::vector<double>>();
  st.stds = j.at("stds").get<std::vector<double>>();
  st.split = j.value("split", "train");
  st.flagged.assign(st.means.size(), 0);
  if (st.means.size() != st.stds.size())
    throw ParseError(path + ": means/stds length mismatch");
  for (double s : st.stds)
    if (s <= 0) throw ParseError(path + ": stds must be positive");
  return st;
}

}  // namespace radiomap::data
