#pragma once

// Command-line surface: simulate | split | train | complete | refine |
// localize | evaluate | ablate | ksweep | report. Every command writes its
// outputs plus a manifest (effective config, input content hashes, wall
// time) so a run can be replayed exactly.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "radiomap/comgan.hpp"
#include "radiomap/config.hpp"
#include "radiomap/dataset.hpp"
#include "radiomap/eval.hpp"
#include "radiomap/localizer.hpp"
#include "radiomap/refine.hpp"
#include "radiomap/scene_sim.hpp"

namespace radiomap::cli {

namespace detail {

inline std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ManifestWriter {
  std::string command;
  nlohmann::ordered_json config;  // effective config, optional
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::string& path) const {
    nlohmann::ordered_json m;
    m["command"] = command;
    if (!config.is_null()) {
      m["config"] = config;
      m["config_digest"] = digest_string(config.dump());
    }
    auto in = nlohmann::ordered_json::object();
    for (const auto& p : inputs) in[p] = digest_file(p);
    m["inputs"] = in;
    m["outputs"] = outputs;
    m["wall_sec"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m["timestamp"] = timestamp_utc();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("manifest: cannot open " + path);
    os << m.dump(2) << "\n";
  }
};

inline void ensure_parent_dir(const std::string& file) {
  const auto parent = std::filesystem::path(file).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

inline void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

inline comgan::ComganParams make_model_shell(int ru_count, const comgan::GeneratorConfig& gcfg,
                                             const comgan::CriticConfig& ccfg) {
  Rng rng(0);
  return {comgan::Generator::init(ru_count, gcfg, rng), comgan::Critic::init(ru_count, ccfg, rng),
          {}, {}, {}};
}

inline comgan::ComganParams load_model(const std::string& ckpt, int ru_count,
                                       const comgan::GeneratorConfig& gcfg,
                                       const comgan::CriticConfig& ccfg) {
  auto model = make_model_shell(ru_count, gcfg, ccfg);
  auto ps = model.checkpoint_set();
  try {
    nn::load_checkpoint(ps, ckpt);
  } catch (const std::exception& e) {
    throw UserError(e.what());
  }
  return model;
}

inline std::vector<std::vector<double>> load_queries_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UserError("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw UserError(path + ":1: empty file");
  const auto header = data::detail::split_line(line);
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] != "rss_" + std::to_string(i))
      throw UserError(path + ":1: expected header rss_0..rss_{L-1}, got \"" + header[i] + "\"");
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = data::detail::split_line(line);
    if (f.size() != header.size())
      throw UserError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " fields");
    std::vector<double> row;
    row.reserve(f.size());
    try {
      for (const auto& s : f) row.push_back(std::stod(s));
    } catch (const std::exception&) {
      throw UserError(path + ":" + std::to_string(lineno) + ": bad number");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_report_files(const eval::EvalReport& rep, const RunConfig& rc,
                               const std::string& command, ManifestWriter& mw) {
  ensure_dir(rc.out_dir);
  const std::string report_path = rc.out_dir + "/report.json";
  {
    std::ofstream os(report_path);
    if (!os) throw std::runtime_error("cannot open " + report_path);
    os << eval::report_to_json(rep).dump(2) << "\n";
  }
  mw.outputs.push_back(report_path);
  if (!rep.loc_by_k.empty()) {
    const std::string csv = rc.out_dir + "/k_sweep.csv";
    eval::write_ksweep_csv(rep, csv);
    mw.outputs.push_back(csv);
  }
  mw.write(rc.out_dir + "/manifest.json");
  std::cout << command << ": report written to " << report_path << "\n";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

inline void cmd_simulate(const std::string& scene_path, const std::string& out,
                         int samples_per_rp, std::uint64_t seed, bool seed_set) {
  detail::ManifestWriter mw;
  mw.command = "simulate";
  sim::Scene scene = scene_path.empty() ? sim::default_scene() : sim::load_scene(scene_path);
  if (!scene_path.empty()) mw.inputs.push_back(scene_path);
  Rng rng(seed_set ? seed : scene.seed);
  const auto db = sim::build_database(scene, samples_per_rp, rng);
  detail::ensure_parent_dir(out);
  data::save(db, out);
  mw.outputs.push_back(out);
  mw.config = {{"scene", sim::scene_to_json(scene)},
               {"samples_per_rp", samples_per_rp},
               {"seed", seed_set ? seed : scene.seed}};
  mw.write(out + ".manifest.json");
  std::cout << "simulate: " << db.rows() << " rows x " << db.ru_count << " RUs -> " << out << "\n";
}

inline void cmd_split(const std::string& db_path, int n_train, int n_test, int n_loc,
                      std::uint64_t seed, const std::string& out_dir) {
  detail::ManifestWriter mw;
  mw.command = "split";
  mw.inputs.push_back(db_path);
  const auto db = data::load(db_path);
  const auto splits = data::split_by_rp(db, {n_train, n_test, n_loc, seed});
  detail::ensure_dir(out_dir);
  const std::string t = out_dir + "/train.csv", e = out_dir + "/test.csv",
                    l = out_dir + "/loc_test.csv";
  data::save(splits.train, t);
  data::save(splits.test, e);
  data::save(splits.loc_test, l);
  mw.outputs = {t, e, l};
  mw.config = {{"rss_train", n_train}, {"rss_test", n_test}, {"loc_test", n_loc}, {"seed", seed}};
  mw.write(out_dir + "/manifest.json");
  std::cout << "split: " << n_train << "/" << n_test << "/" << n_loc << " RPs -> " << out_dir
            << "\n";
}

inline void cmd_train(const std::string& config_path, const std::string& out_dir_override) {
  detail::ManifestWriter mw;
  mw.command = "train";
  RunConfig rc = config_path.empty() ? config_from_json(nlohmann::json::object())
                                     : parse_config(config_path);
  if (!config_path.empty()) mw.inputs.push_back(config_path);
  if (!out_dir_override.empty()) rc.out_dir = out_dir_override;
  mw.config = config_to_json(rc);
  const auto& p = rc.protocol;
  detail::ensure_dir(rc.out_dir);

  const std::uint64_t seed = p.seeds.front();
  sim::Scene scene = p.scene;
  Rng db_rng(derive_seed(seed, "db"));
  const auto db = sim::build_database(scene, p.samples_per_rp, db_rng);
  data::SplitSpec split = p.split;
  split.seed = derive_seed(seed, "split");
  const auto splits = data::split_by_rp(db, split);
  auto stats = data::fit_standardizer(splits.train);
  const auto train_std = data::transform(splits.train, stats, data::Direction::forward);

  comgan::TrainConfig tcfg = p.tcfg;
  tcfg.seed = derive_seed(seed, "comgan");
  if (tcfg.checkpoint_every > 0) tcfg.checkpoint_dir = rc.out_dir;
  const CoordMap coords{scene.area_bounds};
  const auto model = comgan::train(train_std, coords, tcfg, p.gcfg, p.ccfg);

  const std::string ckpt = rc.out_dir + "/comgan.ckpt";
  nn::save_checkpoint(model.checkpoint_set(), ckpt);
  const std::string stats_path = rc.out_dir + "/stats.json";
  data::save_stats(stats, stats_path);
  const std::string scene_path = rc.out_dir + "/scene.json";
  sim::save_scene(scene, scene_path);
  for (const auto& [name, d] :
       {std::pair{"train.csv", &splits.train}, {"test.csv", &splits.test},
        {"loc_test.csv", &splits.loc_test}})
    data::save(*d, rc.out_dir + "/" + name);
  mw.outputs = {ckpt, stats_path, scene_path, rc.out_dir + "/train.csv",
                rc.out_dir + "/test.csv", rc.out_dir + "/loc_test.csv"};

  // training manifest: config, seed, per-epoch losses, wall time
  auto epochs = nlohmann::ordered_json::array();
  for (const auto& h : model.history)
    epochs.push_back({{"critic_total", h.critic_total},
                      {"critic_adv", h.critic_adv},
                      {"critic_gp", h.critic_gp},
                      {"critic_aux", h.critic_aux},
                      {"gen_total", h.gen_total},
                      {"gen_adv", h.gen_adv},
                      {"gen_aux", h.gen_aux},
                      {"gen_l1", h.gen_l1}});
  mw.config["training"] = {{"seed", seed}, {"epoch_losses", epochs}};
  mw.write(rc.out_dir + "/manifest.json");
  std::cout << "train: " << model.history.size() << " epochs -> " << ckpt << "\n";
}

inline void cmd_complete(const std::string& config_path, const std::string& ckpt,
                         const std::string& stats_path, const std::string& scene_path,
                         const std::string& db_path, const std::string& out) {
  detail::ManifestWriter mw;
  mw.command = "complete";
  RunConfig rc = config_path.empty() ? config_from_json(nlohmann::json::object())
                                     : parse_config(config_path);
  for (const auto& p : {config_path, ckpt, stats_path, scene_path, db_path})
    if (!p.empty()) mw.inputs.push_back(p);
  const auto stats = data::load_stats(stats_path);
  const auto scene = sim::load_scene(scene_path);
  const auto db = data::load(db_path);
  if (db.ru_count != stats.ru_count()) throw UserError("database/stats RU count mismatch");
  const auto model = detail::load_model(ckpt, stats.ru_count(), rc.protocol.gcfg, rc.protocol.ccfg);
  const comgan::Completer completer(model.gen, stats, CoordMap{scene.area_bounds});
  auto completed = eval::detail::complete_database(db, completer);
  detail::ensure_parent_dir(out);
  data::save(completed, out);
  mw.outputs.push_back(out);
  mw.write(out + ".manifest.json");
  std::cout << "complete: " << completed.rows() << " rows -> " << out << "\n";
}

inline void cmd_refine(const std::string& config_path, const std::string& ckpt,
                       const std::string& stats_path, const std::string& scene_path,
                       const std::string& db_path, int k, std::uint64_t seed,
                       const std::string& out) {
  detail::ManifestWriter mw;
  mw.command = "refine";
  RunConfig rc = config_path.empty() ? config_from_json(nlohmann::json::object())
                                     : parse_config(config_path);
  for (const auto& p : {config_path, ckpt, stats_path, scene_path, db_path})
    if (!p.empty()) mw.inputs.push_back(p);
  const auto stats = data::load_stats(stats_path);
  const auto scene = sim::load_scene(scene_path);
  const auto db = data::load(db_path);
  const auto model = detail::load_model(ckpt, stats.ru_count(), rc.protocol.gcfg, rc.protocol.ccfg);
  const comgan::Completer completer(model.gen, stats, CoordMap{scene.area_bounds});
  Rng rng(seed);
  const auto hybrid = refine::refine_database(db, completer, k, rng);
  detail::ensure_parent_dir(out);
  data::save(hybrid, out);
  mw.outputs.push_back(out);
  mw.config = {{"k", k}, {"seed", seed}};
  mw.write(out + ".manifest.json");
  std::cout << "refine: K=" << k << ", " << hybrid.rows() << " rows -> " << out << "\n";
}

inline void cmd_localize(const std::string& db_path, const std::string& queries_path,
                         const std::string& kind, int knn_k, const std::string& stats_path,
                         const std::string& scene_path, std::uint64_t seed,
                         const std::string& out) {
  detail::ManifestWriter mw;
  mw.command = "localize";
  for (const auto& p : {db_path, queries_path, stats_path, scene_path})
    if (!p.empty()) mw.inputs.push_back(p);
  const auto db = data::load(db_path);
  const auto queries = detail::load_queries_csv(queries_path);
  const auto scene = scene_path.empty() ? sim::default_scene() : sim::load_scene(scene_path);
  const CoordMap coords{scene.area_bounds};

  loc::LocalizerModel model;
  if (kind == "knn") {
    model = loc::make_knn(db, knn_k, coords);
  } else if (kind == "learned") {
    if (stats_path.empty()) throw UserError("localize: --stats is required for --kind learned");
    const auto stats = data::load_stats(stats_path);
    loc::LearnedConfig lc;
    lc.seed = derive_seed(seed, "loc");
    model = loc::train_localizer(db, stats, coords, lc);
  } else {
    throw UserError("localize: --kind must be knn or learned");
  }

  const auto positions = loc::localize_batch(model, queries, scene.grid_spacing);
  detail::ensure_parent_dir(out);
  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot open " + out);
  os << "x,y\n";
  for (const auto& p : positions)
    os << data::detail::fmt_double(p.x) << ',' << data::detail::fmt_double(p.y) << "\n";
  mw.outputs.push_back(out);
  mw.config = {{"kind", kind}, {"knn_k", knn_k}, {"seed", seed}};
  mw.write(out + ".manifest.json");
  std::cout << "localize: " << positions.size() << " queries -> " << out << "\n";
}

inline void cmd_protocol(const char* name, const std::string& config_path,
                         const std::string& out_dir_override, bool ablation, bool ksweep) {
  detail::ManifestWriter mw;
  mw.command = name;
  RunConfig rc = config_path.empty() ? config_from_json(nlohmann::json::object())
                                     : parse_config(config_path);
  if (!config_path.empty()) mw.inputs.push_back(config_path);
  if (!out_dir_override.empty()) rc.out_dir = out_dir_override;
  mw.config = config_to_json(rc);
  auto p = rc.protocol;
  p.run_comparison = !ksweep;
  p.run_ablation = ablation;
  p.run_ksweep = ksweep;
  const auto rep = eval::run_protocol(p, config_digest(rc));
  detail::write_report_files(rep, rc, name, mw);
}

inline void cmd_report(const std::string& in_path) {
  std::ifstream is(in_path);
  if (!is) throw UserError("cannot open " + in_path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw UserError(in_path + ": " + std::string(e.what()));
  }
  const auto rep = eval::report_from_json(j);
  std::cout << "kind: " << rep.kind << "\nseeds:";
  for (auto s : rep.seeds) std::cout << ' ' << s;
  std::cout << "\n\ncompletion RSS RMSE: " << rep.rss_rmse.mean << " +/- " << rep.rss_rmse.stddev
            << " dB (NRMSE " << rep.rss_nrmse.mean << ")\n"
            << "bootstrap 95% CI: [" << rep.pooled_ci_lo << ", " << rep.pooled_ci_hi << "] dB\n"
            << "baselines: mean-impute " << rep.baseline_mean.mean << " dB, IDW "
            << rep.baseline_idw.mean << " dB\n";
  if (rep.kind != "ksweep") {
    std::cout << "\nlocalization RMSE (m):\n"
              << "  incomplete: " << rep.loc_incomplete.mean << " +/- " << rep.loc_incomplete.stddev
              << "\n  full:       " << rep.loc_full.mean << " +/- " << rep.loc_full.stddev
              << "\n  hybrid:     " << rep.loc_hybrid.mean << " +/- " << rep.loc_hybrid.stddev
              << "\n";
  }
  if (rep.kind == "ablation" || rep.kind == "protocol") {
    std::cout << "\nablation (localization RMSE, m):\n"
              << "  full with/without refinement: " << rep.loc_full_refined.mean << " / "
              << rep.loc_full_unrefined.mean << "\n"
              << "  lite with/without refinement: " << rep.loc_lite_refined.mean << " / "
              << rep.loc_lite_unrefined.mean << "\n"
              << "  lite RSS RMSE: " << rep.lite_rss_rmse.mean << " dB\n";
  }
  if (!rep.loc_by_k.empty()) {
    std::cout << "\nK sweep (localization RMSE, m):\n";
    for (int k : rep.k_values)
      std::cout << "  K=" << k << ": " << rep.loc_by_k.at(k).mean << " +/- "
                << rep.loc_by_k.at(k).stddev << "\n";
    std::cout << "default K: " << rep.default_k << "\n";
  }
  std::cout << "\nlatency (complete + refine, one sample): " << rep.latency_ms.mean << " ms\n";
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

inline int dispatch(int argc, const char* const* argv) {
  CLI::App app{"radio-map completion and fingerprinting localization toolkit"};
  app.require_subcommand(1);

  // simulate
  std::string scene_path, out_path, config_path, out_dir;
  int samples_per_rp = 48;
  std::uint64_t seed = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a fingerprint database from a scene");
  sim_cmd->add_option("--scene", scene_path, "scene JSON (defaults to the stock scene)");
  sim_cmd->add_option("--out", out_path, "output database CSV")->required();
  sim_cmd->add_option("--samples-per-rp", samples_per_rp, "observations per reference point");
  auto* sim_seed = sim_cmd->add_option("--seed", seed, "sampling seed (defaults to scene seed)");

  // split
  std::string db_path;
  int n_train = 15, n_test = 15, n_loc = 10;
  auto* split_cmd = app.add_subcommand("split", "RP-disjoint database split");
  split_cmd->add_option("--db", db_path, "database CSV")->required();
  split_cmd->add_option("--train", n_train, "RSS-training RP count");
  split_cmd->add_option("--test", n_test, "RSS-testing RP count");
  split_cmd->add_option("--loc", n_loc, "localization-testing RP count");
  split_cmd->add_option("--seed", seed, "shuffle seed");
  split_cmd->add_option("--out-dir", out_dir, "output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train the completion model per config");
  train_cmd->add_option("--config", config_path, "run configuration JSON");
  train_cmd->add_option("--out-dir", out_dir, "output directory override");

  // complete
  std::string ckpt_path, stats_path, queries_path, kind = "learned";
  auto* complete_cmd = app.add_subcommand("complete", "fill missing entries of a sparse database");
  complete_cmd->add_option("--config", config_path, "run configuration JSON");
  complete_cmd->add_option("--model", ckpt_path, "model checkpoint")->required();
  complete_cmd->add_option("--stats", stats_path, "standardization stats JSON")->required();
  complete_cmd->add_option("--scene", scene_path, "scene JSON")->required();
  complete_cmd->add_option("--db", db_path, "sparse database CSV")->required();
  complete_cmd->add_option("--out", out_path, "output CSV")->required();

  // refine
  int refine_k = 2;
  auto* refine_cmd = app.add_subcommand("refine", "subset-aggregate a sparse database");
  refine_cmd->add_option("--config", config_path, "run configuration JSON");
  refine_cmd->add_option("--model", ckpt_path, "model checkpoint")->required();
  refine_cmd->add_option("--stats", stats_path, "standardization stats JSON")->required();
  refine_cmd->add_option("--scene", scene_path, "scene JSON")->required();
  refine_cmd->add_option("--db", db_path, "sparse database CSV")->required();
  refine_cmd->add_option("--k", refine_k, "number of subsets");
  refine_cmd->add_option("--seed", seed, "RU selection seed");
  refine_cmd->add_option("--out", out_path, "output CSV")->required();

  // localize
  int knn_k = 3;
  auto* loc_cmd = app.add_subcommand("localize", "estimate positions for query RSS vectors");
  loc_cmd->add_option("--db", db_path, "fingerprint database CSV")->required();
  loc_cmd->add_option("--queries", queries_path, "queries CSV (rss_0..rss_{L-1})")->required();
  loc_cmd->add_option("--kind", kind, "knn or learned");
  loc_cmd->add_option("--knn-k", knn_k, "neighbors for knn");
  loc_cmd->add_option("--stats", stats_path, "standardization stats JSON (learned)");
  loc_cmd->add_option("--scene", scene_path, "scene JSON (bounds for clamping)");
  loc_cmd->add_option("--seed", seed, "training seed (learned)");
  loc_cmd->add_option("--out", out_path, "output positions CSV")->required();

  // evaluate / ablate / ksweep
  auto* eval_cmd = app.add_subcommand("evaluate", "incomplete/full/hybrid comparison protocol");
  eval_cmd->add_option("--config", config_path, "run configuration JSON");
  eval_cmd->add_option("--out-dir", out_dir, "output directory override");
  auto* ablate_cmd = app.add_subcommand("ablate", "lite-variant ablation protocol");
  ablate_cmd->add_option("--config", config_path, "run configuration JSON");
  ablate_cmd->add_option("--out-dir", out_dir, "output directory override");
  auto* ksweep_cmd = app.add_subcommand("ksweep", "subset-count sweep");
  ksweep_cmd->add_option("--config", config_path, "run configuration JSON");
  ksweep_cmd->add_option("--out-dir", out_dir, "output directory override");

  // report
  std::string report_path;
  auto* report_cmd = app.add_subcommand("report", "summarize a report JSON");
  report_cmd->add_option("--in", report_path, "report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (sim_cmd->parsed())
      cmd_simulate(scene_path, out_path, samples_per_rp, seed, sim_seed->count() > 0);
    else if (split_cmd->parsed())
      cmd_split(db_path, n_train, n_test, n_loc, seed, out_dir);
    else if (train_cmd->parsed())
      cmd_train(config_path, out_dir);
    else if (complete_cmd->parsed())
      cmd_complete(config_path, ckpt_path, stats_path, scene_path, db_path, out_path);
    else if (refine_cmd->parsed())
      cmd_refine(config_path, ckpt_path, stats_path, scene_path, db_path, refine_k, seed, out_path);
    else if (loc_cmd->parsed())
      cmd_localize(db_path, queries_path, kind, knn_k, stats_path, scene_path, seed, out_path);
    else if (eval_cmd->parsed())
      cmd_protocol("evaluate", config_path, out_dir, false, false);
    else if (ablate_cmd->parsed())
      cmd_protocol("ablate", config_path, out_dir, true, false);
    else if (ksweep_cmd->parsed())
      cmd_protocol("ksweep", config_path, out_dir, false, true);
    else if (report_cmd->parsed())
      cmd_report(report_path);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const data::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace radiomap::cli
