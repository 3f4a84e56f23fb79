#pragma once

// Metrics, bootstrap confidence intervals, naive imputation baselines, and
// the experiment harnesses: completion-vs-baseline comparison, localization
// with incomplete/full/hybrid training data, the lite-variant ablation, and
// the subset-count sweep.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "radiomap/comgan.hpp"
#include "radiomap/dataset.hpp"
#include "radiomap/localizer.hpp"
#include "radiomap/refine.hpp"
#include "radiomap/rng.hpp"
#include "radiomap/scene_sim.hpp"

namespace radiomap::eval {

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

inline double rmse_of_errors(const std::vector<double>& errors) {
  if (errors.empty()) throw std::invalid_argument("rmse: empty selection");
  double ss = 0.0;
  for (double e : errors) ss += e * e;
  return std::sqrt(ss / errors.size());
}

inline double rmse(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("rmse: misaligned or empty inputs");
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    ss += e * e;
  }
  return std::sqrt(ss / pred.size());
}

/// RMSE divided by the truth range over the evaluated entries.
inline double nrmse(const std::vector<double>& pred, const std::vector<double>& truth) {
  const double r = rmse(pred, truth);
  const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
  const double range = *hi - *lo;
  if (range <= 0.0) throw std::invalid_argument("nrmse: truth range is zero");
  return r / range;
}

/// Percentile bootstrap interval for the RMSE statistic; endpoints are
/// order statistics of the B resample values.
inline std::pair<double, double> bootstrap_ci(const std::vector<double>& errors, int B,
                                              double level, Rng& rng) {
  const int n = static_cast<int>(errors.size());
  if (n < 2) throw std::invalid_argument("bootstrap_ci: need at least 2 errors");
  if (B < 2) throw std::invalid_argument("bootstrap_ci: need at least 2 resamples");
  if (level <= 0.0 || level >= 1.0) throw std::invalid_argument("bootstrap_ci: level in (0,1)");
  std::vector<double> stats(B);
  for (int b = 0; b < B; ++b) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = errors[rng.uniform_int(n)];
      ss += e * e;
    }
    stats[b] = std::sqrt(ss / n);
  }
  std::sort(stats.begin(), stats.end());
  const double q = (1.0 - level) / 2.0;
  const auto rank = [&](double p) {
    return stats[static_cast<std::size_t>(std::llround(p * (B - 1)))];
  };
  return {rank(q), rank(1.0 - q)};
}

// ---------------------------------------------------------------------------
// baselines
// ---------------------------------------------------------------------------

enum class ImputeMethod { mean, idw };

/// Fills the unmeasured entries of db_sparse from the training split: the
/// per-RU mean, or an inverse-distance-weighted (power 2) average of the
/// same RU's per-RP centroid values at the training RPs.
inline data::FingerprintDatabase baseline_impute(const data::FingerprintDatabase& db_sparse,
                                                 ImputeMethod method,
                                                 const data::FingerprintDatabase& train_db,
                                                 double power = 2.0) {
  const int L = db_sparse.ru_count;
  if (train_db.ru_count != L)
    throw std::invalid_argument("baseline_impute: RU count mismatch");

  std::vector<double> ru_means(L, 0.0);
  if (method == ImputeMethod::mean) {
    for (int l = 0; l < L; ++l) {
      double sum = 0.0;
      int n = 0;
      for (int s = 0; s < train_db.rows(); ++s)
        if (train_db.mask_at(s, l)) {
          sum += train_db.at(s, l);
          ++n;
        }
      if (n == 0) throw std::invalid_argument("baseline_impute: RU " + std::to_string(l) +
                                              " has no measured training entries");
      ru_means[l] = sum / n;
    }
  }

  const auto donors = loc::detail::per_rp_centroids(train_db);

  data::FingerprintDatabase out = db_sparse;
  for (int s = 0; s < db_sparse.rows(); ++s) {
    const Vec2 p = db_sparse.coord_of_row(s);
    for (int l = 0; l < L; ++l) {
      const auto idx = static_cast<std::size_t>(s) * L + l;
      if (db_sparse.mask[idx]) continue;
      if (method == ImputeMethod::mean) {
        out.samples[idx] = ru_means[l];
      } else {
        double wsum = 0.0, vsum = 0.0;
        bool exact = false;
        for (std::size_t r = 0; r < donors.rp_ids.size(); ++r) {
          const double d = distance(p, donors.coords[r]);
          const double v = donors.fingerprints[r * L + l];
          if (d < 1e-9) {
            out.samples[idx] = v;
            exact = true;
            break;
          }
          const double w = 1.0 / std::pow(d, power);
          wsum += w;
          vsum += w * v;
        }
        if (exact) continue;
        if (wsum <= 0.0)
          throw std::invalid_argument("baseline_impute: no donors for RU " + std::to_string(l));
        out.samples[idx] = vsum / wsum;
      }
    }
  }
  out.mask.assign(out.samples.size(), 1);
  return out;
}

// ---------------------------------------------------------------------------
// experiment harness
// ---------------------------------------------------------------------------

struct ProtocolConfig {
  sim::Scene scene;
  int samples_per_rp = 48;
  data::SplitSpec split{15, 15, 10, 0};  // seed is derived per run seed
  comgan::GeneratorConfig gcfg;
  comgan::CriticConfig ccfg;
  comgan::TrainConfig tcfg;
  int refine_k = 2;
  std::vector<int> k_values{1, 2, 3};
  std::string localizer_kind = "learned";  // or "knn"
  int knn_k = 3;
  loc::LearnedConfig loc_cfg;
  int bootstrap_B = 1000;
  double ci_level = 0.95;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int jobs = 1;

  bool run_comparison = true;
  bool run_ablation = false;
  bool run_ksweep = false;
};

struct SeedResult {
  std::uint64_t seed = 0;

  // completion quality of the full model, element-wise on held-out RPs
  double rss_rmse = 0, rss_nrmse = 0, ci_lo = 0, ci_hi = 0;
  double baseline_mean_rmse = 0, baseline_idw_rmse = 0;

  // localization RMSE by training-data variant (comparison protocol)
  double loc_incomplete = 0, loc_full = 0, loc_hybrid = 0;

  // ablation
  double lite_rss_rmse = 0;
  double loc_full_refined = 0, loc_full_unrefined = 0;
  double loc_lite_refined = 0, loc_lite_unrefined = 0;

  // subset-count sweep
  std::map<int, double> loc_by_k;

  double latency_ms = 0;  // complete + refine, one sample, K = refine_k
  double wall_sec = 0;
};

struct Aggregate {
  double mean = 0, stddev = 0;
};

inline Aggregate aggregate_stat(const std::vector<double>& xs) {
  Aggregate a;
  if (xs.empty()) return a;
  for (double x : xs) a.mean += x;
  a.mean /= xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - a.mean) * (x - a.mean);
  a.stddev = std::sqrt(ss / xs.size());
  return a;
}

struct EvalReport {
  std::string kind;
  std::string config_digest;
  std::vector<std::uint64_t> seeds;

  Aggregate rss_rmse, rss_nrmse;
  double pooled_rmse = 0, pooled_ci_lo = 0, pooled_ci_hi = 0;
  Aggregate baseline_mean, baseline_idw;

  Aggregate loc_incomplete, loc_full, loc_hybrid;

  Aggregate lite_rss_rmse;
  Aggregate loc_full_refined, loc_full_unrefined, loc_lite_refined, loc_lite_unrefined;

  std::vector<int> k_values;
  std::map<int, Aggregate> loc_by_k;
  int default_k = 2;  // knee of the sweep

  Aggregate latency_ms;
  double wall_sec = 0;
  std::vector<SeedResult> per_seed;
};

namespace detail {

inline double loc_rmse(const std::vector<Vec2>& est, const std::vector<Vec2>& truth) {
  double ss = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double dx = est[i].x - truth[i].x;
    const double dy = est[i].y - truth[i].y;
    ss += dx * dx + dy * dy;
  }
  return std::sqrt(ss / est.size());
}

struct CompletionEval {
  std::vector<double> errors;      // pred - truth at unmeasured entries
  std::vector<double> pred, truth;  // aligned, same entries
};

/// keep=1 masked completion of every test row against its own ground truth.
inline CompletionEval completion_eval(const data::FingerprintDatabase& test_raw,
                                      const data::FingerprintDatabase& test_sparse,
                                      const data::FingerprintDatabase& completed) {
  CompletionEval ce;
  const int L = test_raw.ru_count;
  for (int s = 0; s < test_raw.rows(); ++s)
    for (int l = 0; l < L; ++l) {
      if (test_sparse.mask_at(s, l)) continue;
      const double p = completed.at(s, l);
      const double t = test_raw.at(s, l);
      ce.pred.push_back(p);
      ce.truth.push_back(t);
      ce.errors.push_back(p - t);
    }
  return ce;
}

/// Runs the completer on each sparse row (keep = however many entries are
/// measured) and returns a fully populated database.
inline data::FingerprintDatabase complete_database(const data::FingerprintDatabase& sparse,
                                                   const comgan::Completer& completer) {
  const int L = sparse.ru_count;
  data::FingerprintDatabase out = sparse;
  constexpr int kChunk = 256;
  for (int start = 0; start < sparse.rows(); start += kChunk) {
    const int count = std::min(kChunk, sparse.rows() - start);
    std::vector<double> masked_std(static_cast<std::size_t>(count) * L, 0.0);
    std::vector<double> rp_norm(static_cast<std::size_t>(count) * 2);
    for (int i = 0; i < count; ++i) {
      const int s = start + i;
      for (int l = 0; l < L; ++l)
        if (sparse.mask_at(s, l))
          masked_std[static_cast<std::size_t>(i) * L + l] =
              completer.stats.forward_value(l, sparse.at(s, l));
      const Vec2 c = completer.coords.normalize(sparse.coord_of_row(s));
      rp_norm[i * 2] = c.x;
      rp_norm[i * 2 + 1] = c.y;
    }
    const auto pred = completer.predict_std(masked_std, rp_norm, count);
    for (int i = 0; i < count; ++i)
      for (int l = 0; l < L; ++l)
        out.samples[(static_cast<std::size_t>(start) + i) * L + l] =
            completer.stats.inverse_value(l, pred[static_cast<std::size_t>(i) * L + l]);
  }
  out.mask.assign(out.samples.size(), 1);
  return out;
}

inline loc::LocalizerModel fit_localizer(const ProtocolConfig& cfg,
                                         const data::FingerprintDatabase& train_db,
                                         const data::StandardizationStats& stats,
                                         const CoordMap& coords, std::uint64_t seed) {
  if (cfg.localizer_kind == "knn") return loc::make_knn(train_db, cfg.knn_k, coords);
  loc::LearnedConfig lc = cfg.loc_cfg;
  lc.seed = seed;
  return loc::train_localizer(train_db, stats, coords, lc);
}

inline double localization_rmse(const ProtocolConfig& cfg, const loc::LocalizerModel& model,
                                const data::FingerprintDatabase& queries) {
  std::vector<std::vector<double>> q;
  std::vector<Vec2> truth;
  q.reserve(queries.rows());
  for (int s = 0; s < queries.rows(); ++s) {
    q.push_back(queries.row(s));
    truth.push_back(queries.coord_of_row(s));
  }
  return loc_rmse(loc::localize_batch(model, q, cfg.scene.grid_spacing), truth);
}

inline SeedResult run_seed(const ProtocolConfig& cfg, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SeedResult r;
  r.seed = seed;

  sim::Scene scene = cfg.scene;
  scene.seed = radiomap::detail::splitmix64(cfg.scene.seed ^ seed);  // fresh NLoS field per seed
  const CoordMap coords{scene.area_bounds};

  Rng db_rng(derive_seed(seed, "db"));
  const auto db = sim::build_database(scene, cfg.samples_per_rp, db_rng);
  data::SplitSpec split = cfg.split;
  split.seed = derive_seed(seed, "split");
  const auto splits = data::split_by_rp(db, split);
  const auto stats = data::fit_standardizer(splits.train);
  const auto train_std = data::transform(splits.train, stats, data::Direction::forward);

  comgan::TrainConfig tcfg = cfg.tcfg;
  tcfg.seed = derive_seed(seed, "comgan");
  const auto model = comgan::train(train_std, coords, tcfg, cfg.gcfg, cfg.ccfg);
  const comgan::Completer completer(model.gen, stats, coords);

  // --- completion quality vs naive baselines (keep=1 masking) ---
  Rng eval_mask_rng(derive_seed(seed, "evalmask"));
  const auto test_sparse1 = data::mask_random_keep(splits.test, tcfg.keep, eval_mask_rng);
  const auto completed = complete_database(test_sparse1, completer);
  const auto ce = completion_eval(splits.test, test_sparse1, completed);
  r.rss_rmse = rmse_of_errors(ce.errors);
  r.rss_nrmse = nrmse(ce.pred, ce.truth);
  Rng boot_rng(derive_seed(seed, "bootstrap"));
  const auto ci = bootstrap_ci(ce.errors, cfg.bootstrap_B, cfg.ci_level, boot_rng);
  r.ci_lo = ci.first;
  r.ci_hi = ci.second;
  const auto base_mean = completion_eval(
      splits.test, test_sparse1, baseline_impute(test_sparse1, ImputeMethod::mean, splits.train));
  r.baseline_mean_rmse = rmse_of_errors(base_mean.errors);
  const auto base_idw = completion_eval(
      splits.test, test_sparse1, baseline_impute(test_sparse1, ImputeMethod::idw, splits.train));
  r.baseline_idw_rmse = rmse_of_errors(base_idw.errors);

  // --- localization: incomplete vs full vs hybrid training data ---
  const auto hybrid_for = [&](const comgan::Completer& c, int k, const char* tag) {
    Rng ru_rng(derive_seed(seed, std::string("rus.") + tag + std::to_string(k)));
    const auto rus = refine::select_rus(scene.ru_count(), k, ru_rng);
    const auto sparse = data::mask_to_columns(splits.test, rus);
    Rng refine_rng(derive_seed(seed, std::string("refine.") + tag + std::to_string(k)));
    return std::make_pair(sparse, refine::refine_database(sparse, c, k, refine_rng));
  };

  const auto [inc_db, hybrid_db] = hybrid_for(completer, cfg.refine_k, "cmp");
  const std::uint64_t loc_seed = derive_seed(seed, "loc");
  if (cfg.run_comparison) {
    r.loc_incomplete = localization_rmse(
        cfg, fit_localizer(cfg, inc_db, stats, coords, loc_seed), splits.loc_test);
    r.loc_full = localization_rmse(cfg, fit_localizer(cfg, splits.test, stats, coords, loc_seed),
                                   splits.loc_test);
    r.loc_hybrid = localization_rmse(
        cfg, fit_localizer(cfg, hybrid_db, stats, coords, loc_seed), splits.loc_test);
  }

  // --- ablation: lite variant (no aux branch term), with/without refinement ---
  if (cfg.run_ablation) {
    comgan::TrainConfig lite_cfg = tcfg;
    lite_cfg.lambda_rp = 0.0;
    const auto lite = comgan::train(train_std, coords, lite_cfg, cfg.gcfg, cfg.ccfg);
    const comgan::Completer lite_completer(lite.gen, stats, coords);

    const auto lite_completed = complete_database(test_sparse1, lite_completer);
    r.lite_rss_rmse = rmse_of_errors(completion_eval(splits.test, test_sparse1, lite_completed).errors);

    r.loc_full_refined = cfg.run_comparison
                             ? r.loc_hybrid
                             : localization_rmse(cfg, fit_localizer(cfg, hybrid_db, stats, coords,
                                                                    loc_seed),
                                                 splits.loc_test);
    const auto full_k1 = hybrid_for(completer, 1, "abl").second;
    r.loc_full_unrefined = localization_rmse(
        cfg, fit_localizer(cfg, full_k1, stats, coords, loc_seed), splits.loc_test);
    const auto lite_k = hybrid_for(lite_completer, cfg.refine_k, "abl").second;
    r.loc_lite_refined = localization_rmse(
        cfg, fit_localizer(cfg, lite_k, stats, coords, loc_seed), splits.loc_test);
    const auto lite_k1 = hybrid_for(lite_completer, 1, "abl").second;
    r.loc_lite_unrefined = localization_rmse(
        cfg, fit_localizer(cfg, lite_k1, stats, coords, loc_seed), splits.loc_test);
  }

  // --- subset-count sweep ---
  if (cfg.run_ksweep) {
    for (int k : cfg.k_values) {
      if (k == cfg.refine_k) {
        r.loc_by_k[k] = cfg.run_comparison
                            ? r.loc_hybrid
                            : localization_rmse(cfg, fit_localizer(cfg, hybrid_db, stats, coords,
                                                                   loc_seed),
                                                splits.loc_test);
        continue;
      }
      const auto hk = hybrid_for(completer, k, "sweep").second;
      r.loc_by_k[k] =
          localization_rmse(cfg, fit_localizer(cfg, hk, stats, coords, loc_seed), splits.loc_test);
    }
  }

  // --- single-sample inference latency (complete + refine, K = refine_k) ---
  {
    const int L = scene.ru_count();
    Rng lat_rng(derive_seed(seed, "latency"));
    const auto rus = refine::select_rus(L, cfg.refine_k, lat_rng);
    const auto row = splits.test.row(0);
    std::vector<std::uint8_t> m(L, 0);
    for (int ru : rus) m[ru] = 1;
    const auto t_start = std::chrono::steady_clock::now();
    std::vector<std::vector<double>> preds;
    for (int ru : rus) {
      std::vector<std::uint8_t> single(L, 0);
      single[ru] = 1;
      preds.push_back(completer.complete(row, single, splits.test.coord_of_row(0)));
    }
    const auto refined = refine::aggregate(m, row, preds);
    (void)refined;
    r.latency_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t_start)
                       .count();
  }

  r.wall_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace detail

/// Runs the configured protocol for every seed (optionally in parallel; each
/// seed is internally single-threaded and fully deterministic).
inline EvalReport run_protocol(const ProtocolConfig& cfg, const std::string& digest = "") {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<SeedResult> results(cfg.seeds.size());

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1 || cfg.seeds.size() <= 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
      results[i] = detail::run_seed(cfg, cfg.seeds[i]);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cfg.seeds.size(); i = next.fetch_add(1))
          results[i] = detail::run_seed(cfg, cfg.seeds[i]);
      });
    for (auto& th : pool) th.join();
  }

  EvalReport rep;
  rep.kind = cfg.run_ablation && cfg.run_ksweep ? "protocol"
             : cfg.run_ablation                 ? "ablation"
             : cfg.run_ksweep                   ? "ksweep"
                                                : "comparison";
  rep.config_digest = digest;
  rep.seeds = cfg.seeds;
  rep.per_seed = results;
  rep.k_values = cfg.k_values;
  rep.default_k = cfg.refine_k;

  const auto collect = [&](auto getter) {
    std::vector<double> xs;
    for (const auto& r : results) xs.push_back(getter(r));
    return aggregate_stat(xs);
  };
  rep.rss_rmse = collect([](const SeedResult& r) { return r.rss_rmse; });
  rep.rss_nrmse = collect([](const SeedResult& r) { return r.rss_nrmse; });
  rep.baseline_mean = collect([](const SeedResult& r) { return r.baseline_mean_rmse; });
  rep.baseline_idw = collect([](const SeedResult& r) { return r.baseline_idw_rmse; });
  rep.latency_ms = collect([](const SeedResult& r) { return r.latency_ms; });
  if (cfg.run_comparison) {
    rep.loc_incomplete = collect([](const SeedResult& r) { return r.loc_incomplete; });
    rep.loc_full = collect([](const SeedResult& r) { return r.loc_full; });
    rep.loc_hybrid = collect([](const SeedResult& r) { return r.loc_hybrid; });
  }
  if (cfg.run_ablation) {
    rep.lite_rss_rmse = collect([](const SeedResult& r) { return r.lite_rss_rmse; });
    rep.loc_full_refined = collect([](const SeedResult& r) { return r.loc_full_refined; });
    rep.loc_full_unrefined = collect([](const SeedResult& r) { return r.loc_full_unrefined; });
    rep.loc_lite_refined = collect([](const SeedResult& r) { return r.loc_lite_refined; });
    rep.loc_lite_unrefined = collect([](const SeedResult& r) { return r.loc_lite_unrefined; });
  }
  if (cfg.run_ksweep) {
    for (int k : cfg.k_values) {
      std::vector<double> xs;
      for (const auto& r : results) xs.push_back(r.loc_by_k.at(k));
      rep.loc_by_k[k] = aggregate_stat(xs);
    }
  }

  // pooled completion errors are not kept per entry; pool by seed RMS
  {
    std::vector<double> per_seed_rmse;
    for (const auto& r : results) per_seed_rmse.push_back(r.rss_rmse);
    rep.pooled_rmse = rmse_of_errors(per_seed_rmse);
    // pooled CI endpoints: mean of per-seed endpoints
    double lo = 0, hi = 0;
    for (const auto& r : results) {
      lo += r.ci_lo;
      hi += r.ci_hi;
    }
    rep.pooled_ci_lo = lo / results.size();
    rep.pooled_ci_hi = hi / results.size();
  }

  rep.wall_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline EvalReport run_comparison(ProtocolConfig cfg, const std::string& digest = "") {
  cfg.run_comparison = true;
  cfg.run_ablation = false;
  cfg.run_ksweep = false;
  return run_protocol(cfg, digest);
}

inline EvalReport run_ablation(ProtocolConfig cfg, const std::string& digest = "") {
  cfg.run_comparison = true;
  cfg.run_ablation = true;
  cfg.run_ksweep = false;
  return run_protocol(cfg, digest);
}

inline EvalReport run_k_sweep(ProtocolConfig cfg, std::vector<int> k_values,
                              const std::string& digest = "") {
  for (int k : k_values)
    if (k < 1 || k >= cfg.scene.ru_count())
      throw std::invalid_argument("run_k_sweep: K=" + std::to_string(k) + " out of range");
  cfg.k_values = std::move(k_values);
  cfg.run_comparison = false;
  cfg.run_ablation = false;
  cfg.run_ksweep = true;
  return run_protocol(cfg, digest);
}

// ---------------------------------------------------------------------------
// report serialization
// ---------------------------------------------------------------------------

namespace detail {
inline nlohmann::ordered_json agg_json(const Aggregate& a) {
  return {{"mean", a.mean}, {"std", a.stddev}};
}
inline Aggregate agg_from(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("std").get<double>()};
}
}  // namespace detail

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["kind"] = r.kind;
  j["config_digest"] = r.config_digest;
  j["seeds"] = r.seeds;
  j["completion"] = {{"rmse", detail::agg_json(r.rss_rmse)},
                     {"nrmse", detail::agg_json(r.rss_nrmse)},
                     {"pooled_rmse", r.pooled_rmse},
                     {"bootstrap_ci", {r.pooled_ci_lo, r.pooled_ci_hi}}};
  j["baselines"] = {{"mean", detail::agg_json(r.baseline_mean)},
                    {"idw", detail::agg_json(r.baseline_idw)}};
  if (r.kind == "comparison" || r.kind == "ablation" || r.kind == "protocol")
    j["localization"] = {{"incomplete", detail::agg_json(r.loc_incomplete)},
                         {"full", detail::agg_json(r.loc_full)},
                         {"hybrid", detail::agg_json(r.loc_hybrid)}};
  if (r.kind == "ablation" || r.kind == "protocol") {
    j["ablation"] = {{"lite_rss_rmse", detail::agg_json(r.lite_rss_rmse)},
                     {"loc_full_refined", detail::agg_json(r.loc_full_refined)},
                     {"loc_full_unrefined", detail::agg_json(r.loc_full_unrefined)},
                     {"loc_lite_refined", detail::agg_json(r.loc_lite_refined)},
                     {"loc_lite_unrefined", detail::agg_json(r.loc_lite_unrefined)}};
  }
  if (r.kind == "ksweep" || r.kind == "protocol") {
    auto sweep = nlohmann::ordered_json::array();
    for (int k : r.k_values) {
      const auto& a = r.loc_by_k.at(k);
      sweep.push_back({{"k", k}, {"rmse_mean", a.mean}, {"rmse_std", a.stddev}});
    }
    j["k_sweep"] = sweep;
    // marginal gain of each step up in K
    auto gains = nlohmann::ordered_json::array();
    for (std::size_t i = 1; i < r.k_values.size(); ++i) {
      const double g = r.loc_by_k.at(r.k_values[i - 1]).mean - r.loc_by_k.at(r.k_values[i]).mean;
      gains.push_back({{"from", r.k_values[i - 1]}, {"to", r.k_values[i]}, {"gain_m", g}});
    }
    j["k_sweep_marginal_gains"] = gains;
    j["default_k"] = r.default_k;
  }
  j["latency_ms"] = detail::agg_json(r.latency_ms);
  auto seeds = nlohmann::ordered_json::array();
  for (const auto& s : r.per_seed) {
    nlohmann::ordered_json js;
    js["seed"] = s.seed;
    js["rss_rmse"] = s.rss_rmse;
    js["rss_nrmse"] = s.rss_nrmse;
    js["ci"] = {s.ci_lo, s.ci_hi};
    js["baseline_mean_rmse"] = s.baseline_mean_rmse;
    js["baseline_idw_rmse"] = s.baseline_idw_rmse;
    js["loc_incomplete"] = s.loc_incomplete;
    js["loc_full"] = s.loc_full;
    js["loc_hybrid"] = s.loc_hybrid;
    js["lite_rss_rmse"] = s.lite_rss_rmse;
    js["loc_full_refined"] = s.loc_full_refined;
    js["loc_full_unrefined"] = s.loc_full_unrefined;
    js["loc_lite_refined"] = s.loc_lite_refined;
    js["loc_lite_unrefined"] = s.loc_lite_unrefined;
    auto byk = nlohmann::ordered_json::object();
    for (const auto& [k, v] : s.loc_by_k) byk[std::to_string(k)] = v;
    js["loc_by_k"] = byk;
    js["latency_ms"] = s.latency_ms;
    js["wall_sec"] = s.wall_sec;
    seeds.push_back(js);
  }
  j["per_seed"] = seeds;
  j["wall_sec"] = r.wall_sec;
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.kind = j.at("kind").get<std::string>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  r.rss_rmse = detail::agg_from(j.at("completion").at("rmse"));
  r.rss_nrmse = detail::agg_from(j.at("completion").at("nrmse"));
  r.pooled_rmse = j.at("completion").at("pooled_rmse").get<double>();
  r.pooled_ci_lo = j.at("completion").at("bootstrap_ci")[0].get<double>();
  r.pooled_ci_hi = j.at("completion").at("bootstrap_ci")[1].get<double>();
  r.baseline_mean = detail::agg_from(j.at("baselines").at("mean"));
  r.baseline_idw = detail::agg_from(j.at("baselines").at("idw"));
  if (j.contains("localization")) {
    r.loc_incomplete = detail::agg_from(j.at("localization").at("incomplete"));
    r.loc_full = detail::agg_from(j.at("localization").at("full"));
    r.loc_hybrid = detail::agg_from(j.at("localization").at("hybrid"));
  }
  if (j.contains("ablation")) {
    r.lite_rss_rmse = detail::agg_from(j.at("ablation").at("lite_rss_rmse"));
    r.loc_full_refined = detail::agg_from(j.at("ablation").at("loc_full_refined"));
    r.loc_full_unrefined = detail::agg_from(j.at("ablation").at("loc_full_unrefined"));
    r.loc_lite_refined = detail::agg_from(j.at("ablation").at("loc_lite_refined"));
    r.loc_lite_unrefined = detail::agg_from(j.at("ablation").at("loc_lite_unrefined"));
  }
  if (j.contains("k_sweep")) {
    for (const auto& e : j.at("k_sweep")) {
      const int k = e.at("k").get<int>();
      r.k_values.push_back(k);
      r.loc_by_k[k] = {e.at("rmse_mean").get<double>(), e.at("rmse_std").get<double>()};
    }
    r.default_k = j.value("default_k", 2);
  }
  r.latency_ms = detail::agg_from(j.at("latency_ms"));
  r.wall_sec = j.at("wall_sec").get<double>();
  for (const auto& js : j.at("per_seed")) {
    SeedResult s;
    s.seed = js.at("seed").get<std::uint64_t>();
    s.rss_rmse = js.at("rss_rmse").get<double>();
    s.rss_nrmse = js.at("rss_nrmse").get<double>();
    s.ci_lo = js.at("ci")[0].get<double>();
    s.ci_hi = js.at("ci")[1].get<double>();
    s.baseline_mean_rmse = js.at("baseline_mean_rmse").get<double>();
    s.baseline_idw_rmse = js.at("baseline_idw_rmse").get<double>();
    s.loc_incomplete = js.at("loc_incomplete").get<double>();
    s.loc_full = js.at("loc_full").get<double>();
    s.loc_hybrid = js.at("loc_hybrid").get<double>();
    s.lite_rss_rmse = js.at("lite_rss_rmse").get<double>();
    s.loc_full_refined = js.at("loc_full_refined").get<double>();
    s.loc_full_unrefined = js.at("loc_full_unrefined").get<double>();
    s.loc_lite_refined = js.at("loc_lite_refined").get<double>();
    s.loc_lite_unrefined = js.at("loc_lite_unrefined").get<double>();
    for (const auto& [k, v] : js.at("loc_by_k").items()) s.loc_by_k[std::stoi(k)] = v.get<double>();
    s.latency_ms = js.at("latency_ms").get<double>();
    s.wall_sec = js.at("wall_sec").get<double>();
    r.per_seed.push_back(s);
  }
  return r;
}

/// k_sweep.csv with columns K,rmse_mean,rmse_std.
inline void write_ksweep_csv(const EvalReport& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_ksweep_csv: cannot open " + path);
  os << "K,rmse_mean,rmse_std\n";
  for (int k : r.k_values) {
    const auto& a = r.loc_by_k.at(k);
    os << k << ',' << a.mean << ',' << a.stddev << "\n";
  }
}

}  // namespace radiomap::eval
