#pragma once

// Subset construction and aggregation: each selected RU spawns a prediction
// set from its measurement alone; measured entries pass through untouched
// and unmeasured entries take the plain mean of the K predictions.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "radiomap/comgan.hpp"
#include "radiomap/dataset.hpp"
#include "radiomap/rng.hpp"

namespace radiomap::refine {

struct SubsetPrediction {
  int measured_ru = -1;
  std::vector<double> predictions;   // rows x L, raw dB, aligned with the source database
  std::vector<std::uint8_t> mask_k;  // length L, 1 only at measured_ru
};

/// K distinct RUs drawn uniformly without replacement.
inline std::vector<int> select_rus(int ru_count, int k, Rng& rng) {
  if (k < 1 || k >= ru_count)
    throw std::invalid_argument("select_rus: K must satisfy 1 <= K < " + std::to_string(ru_count));
  return rng.sample_without_replacement(ru_count, k);
}

namespace detail {
/// RUs measured in every row: the candidates a subset may be built from.
inline std::vector<int> fully_measured_rus(const data::FingerprintDatabase& db) {
  std::vector<int> out;
  for (int l = 0; l < db.ru_count; ++l) {
    bool all = true;
    for (int s = 0; s < db.rows() && all; ++s) all = db.mask_at(s, l) != 0;
    if (all) out.push_back(l);
  }
  return out;
}
}  // namespace detail

/// Runs the completer once per selected RU, keeping only that RU's
/// measurement in the input. RUs are drawn from the columns measured in
/// every sample of db_sparse.
inline std::vector<SubsetPrediction> build_subsets(const data::FingerprintDatabase& db_sparse,
                                                   const comgan::Completer& completer, int k,
                                                   Rng& rng) {
  db_sparse.validate();
  const int L = db_sparse.ru_count;
  if (k < 1 || k >= L)
    throw std::invalid_argument("build_subsets: K must satisfy 1 <= K < " + std::to_string(L));
  const auto candidates = detail::fully_measured_rus(db_sparse);
  if (static_cast<int>(candidates.size()) < k)
    throw std::invalid_argument("build_subsets: only " + std::to_string(candidates.size()) +
                                " RUs are measured in every sample, need " + std::to_string(k));
  const auto picks = rng.sample_without_replacement(static_cast<int>(candidates.size()), k);

  const int rows = db_sparse.rows();
  std::vector<SubsetPrediction> subsets;
  subsets.reserve(k);
  for (int pick : picks) {
    const int ru = candidates[pick];
    SubsetPrediction sp;
    sp.measured_ru = ru;
    sp.mask_k.assign(L, 0);
    sp.mask_k[ru] = 1;
    sp.predictions.resize(static_cast<std::size_t>(rows) * L);

    constexpr int kChunk = 256;
    for (int start = 0; start < rows; start += kChunk) {
      const int count = std::min(kChunk, rows - start);
      std::vector<double> masked_std(static_cast<std::size_t>(count) * L, 0.0);
      std::vector<double> rp_norm(static_cast<std::size_t>(count) * 2);
      for (int i = 0; i < count; ++i) {
        const int s = start + i;
        masked_std[static_cast<std::size_t>(i) * L + ru] =
            completer.stats.forward_value(ru, db_sparse.at(s, ru));
        const Vec2 c = completer.coords.normalize(db_sparse.coord_of_row(s));
        rp_norm[i * 2] = c.x;
        rp_norm[i * 2 + 1] = c.y;
      }
      const auto out = completer.predict_std(masked_std, rp_norm, count);
      for (int i = 0; i < count; ++i)
        for (int l = 0; l < L; ++l)
          sp.predictions[(static_cast<std::size_t>(start) + i) * L + l] =
              completer.stats.inverse_value(l, out[static_cast<std::size_t>(i) * L + l]);
    }
    subsets.push_back(std::move(sp));
  }
  return subsets;
}

/// r = m (.) r_meas + (1 - m) (.) mean_k(r_hat_k). Measured entries pass
/// through exactly; unmeasured entries average the K predictions.
inline std::vector<double> aggregate(const std::vector<std::uint8_t>& mask,
                                     const std::vector<double>& measured,
                                     const std::vector<std::vector<double>>& predictions) {
  const std::size_t L = mask.size();
  if (predictions.empty()) throw std::invalid_argument("aggregate: need at least one prediction set");
  if (measured.size() != L) throw std::invalid_argument("aggregate: measured length mismatch");
  for (const auto& p : predictions)
    if (p.size() != L) throw std::invalid_argument("aggregate: prediction length mismatch");
  const double k = static_cast<double>(predictions.size());
  std::vector<double> out(L);
  for (std::size_t l = 0; l < L; ++l) {
    if (mask[l]) {
      out[l] = measured[l];
    } else {
      double s = 0.0;
      for (const auto& p : predictions) s += p[l];
      out[l] = s / k;
    }
  }
  return out;
}

/// Refines every sample of db_sparse into a hybrid database: all entries
/// filled, provenance column marking measured vs predicted dimensions.
inline data::FingerprintDatabase refine_database(const data::FingerprintDatabase& db_sparse,
                                                 const comgan::Completer& completer, int k,
                                                 Rng& rng) {
  const auto subsets = build_subsets(db_sparse, completer, k, rng);
  const int L = db_sparse.ru_count;

  // union of per-subset masks; measured values win at those dimensions
  std::vector<std::uint8_t> m(L, 0);
  for (const auto& sp : subsets)
    for (int l = 0; l < L; ++l) m[l] = m[l] || sp.mask_k[l];

  data::FingerprintDatabase out = db_sparse;
  out.mask.assign(out.samples.size(), 1);
  out.provenance.resize(out.samples.size());
  std::vector<std::vector<double>> preds(subsets.size(), std::vector<double>(L));
  for (int s = 0; s < db_sparse.rows(); ++s) {
    for (std::size_t j = 0; j < subsets.size(); ++j)
      for (int l = 0; l < L; ++l)
        preds[j][l] = subsets[j].predictions[static_cast<std::size_t>(s) * L + l];
    const auto refined = aggregate(m, db_sparse.row(s), preds);
    for (int l = 0; l < L; ++l) {
      out.samples[static_cast<std::size_t>(s) * L + l] = refined[l];
      out.provenance[static_cast<std::size_t>(s) * L + l] = m[l] ? 'M' : 'P';
    }
  }
  return out;
}

}  // namespace radiomap::refine
