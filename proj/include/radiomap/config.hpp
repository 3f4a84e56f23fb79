#pragma once

// Run configuration: JSON schema with paper-default hyperparameters,
// strict unknown-key rejection, content digests, and run manifests.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "radiomap/eval.hpp"
#include "radiomap/scene_sim.hpp"

namespace radiomap::cli {

/// Errors caused by the invocation (bad flags, bad config, missing files)
/// rather than by the implementation. Mapped to exit code 1.
struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string scene_path;  // empty when the scene is inline or defaulted
  eval::ProtocolConfig protocol;
  std::string out_dir = "out";
};

// ---------------------------------------------------------------------------
// digests
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string digest_string(const std::string& s) {
  return hex64(fnv1a64(s.data(), s.size()));
}

inline std::string digest_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UserError("cannot open " + path);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char buf[4096];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(is.gcount()), h);
  return hex64(h);
}

// ---------------------------------------------------------------------------
// config parsing
// ---------------------------------------------------------------------------

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const std::string& path) {
  if (!j.is_object()) throw UserError(path + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw UserError(path + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace detail

/// Parses a run configuration, filling defaults for every absent key. An
/// empty object is valid and reproduces the stock configuration. Unknown
/// keys are rejected with their full path.
inline RunConfig config_from_json(const nlohmann::json& j, const std::string& where = "config") {
  detail::check_keys(j,
                     {"scene", "samples_per_rp", "split", "train", "generator", "critic",
                      "refine_k", "k_values", "localizer", "eval", "seeds", "jobs", "out_dir"},
                     where);
  RunConfig rc;
  auto& p = rc.protocol;

  if (!j.contains("scene")) {
    p.scene = sim::default_scene();
  } else if (j.at("scene").is_string()) {
    rc.scene_path = j.at("scene").get<std::string>();
    try {
      p.scene = sim::load_scene(rc.scene_path);
    } catch (const std::exception& e) {
      throw UserError(std::string(where) + ".scene: " + e.what());
    }
  } else {
    try {
      p.scene = sim::scene_from_json(j.at("scene"), where + ".scene");
    } catch (const std::exception& e) {
      throw UserError(e.what());
    }
  }

  p.samples_per_rp = detail::get_or(j, "samples_per_rp", 48);
  if (p.samples_per_rp < 1) throw UserError(where + ".samples_per_rp: must be >= 1");

  if (j.contains("split")) {
    const auto& s = j.at("split");
    detail::check_keys(s, {"rss_train", "rss_test", "loc_test"}, where + ".split");
    p.split.rss_train = detail::get_or(s, "rss_train", 15);
    p.split.rss_test = detail::get_or(s, "rss_test", 15);
    p.split.loc_test = detail::get_or(s, "loc_test", 10);
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    detail::check_keys(t,
                       {"lambda_gp", "lambda_rp", "lambda_l1", "lr", "n_critic", "batch", "epochs",
                        "keep", "checkpoint_every"},
                       where + ".train");
    p.tcfg.lambda_gp = detail::get_or(t, "lambda_gp", 10.0);
    p.tcfg.lambda_rp = detail::get_or(t, "lambda_rp", 1.0);
    p.tcfg.lambda_l1 = detail::get_or(t, "lambda_l1", 100.0);
    p.tcfg.lr = detail::get_or(t, "lr", 1e-4);
    p.tcfg.n_critic = detail::get_or(t, "n_critic", 5);
    p.tcfg.batch = detail::get_or(t, "batch", 64);
    p.tcfg.epochs = detail::get_or(t, "epochs", 40);
    p.tcfg.keep = detail::get_or(t, "keep", 1);
    p.tcfg.checkpoint_every = detail::get_or(t, "checkpoint_every", 0);
  } else {
    p.tcfg.epochs = 40;
  }

  if (j.contains("generator")) {
    const auto& g = j.at("generator");
    detail::check_keys(g, {"conv_widths", "trunk_fc", "kernel", "leaky_slope", "batchnorm"},
                       where + ".generator");
    p.gcfg.conv_widths = detail::get_or(g, "conv_widths", p.gcfg.conv_widths);
    p.gcfg.trunk_fc = detail::get_or(g, "trunk_fc", 96);
    p.gcfg.kernel = detail::get_or(g, "kernel", 3);
    p.gcfg.leaky_slope = detail::get_or(g, "leaky_slope", 0.2);
    p.gcfg.batchnorm = detail::get_or(g, "batchnorm", true);
  }

  if (j.contains("critic")) {
    const auto& c = j.at("critic");
    detail::check_keys(c, {"conv_widths", "aux_hidden", "kernel", "leaky_slope", "batchnorm"},
                       where + ".critic");
    p.ccfg.conv_widths = detail::get_or(c, "conv_widths", p.ccfg.conv_widths);
    p.ccfg.aux_hidden = detail::get_or(c, "aux_hidden", 8);
    p.ccfg.kernel = detail::get_or(c, "kernel", 3);
    p.ccfg.leaky_slope = detail::get_or(c, "leaky_slope", 0.2);
    p.ccfg.batchnorm = detail::get_or(c, "batchnorm", false);
  }

  p.refine_k = detail::get_or(j, "refine_k", 2);
  p.k_values = detail::get_or(j, "k_values", std::vector<int>{1, 2, 3});

  if (j.contains("localizer")) {
    const auto& l = j.at("localizer");
    detail::check_keys(l, {"kind", "knn_k", "conv_widths", "fc", "epochs", "lr", "batch",
                           "batchnorm"},
                       where + ".localizer");
    p.localizer_kind = detail::get_or(l, "kind", std::string("learned"));
    if (p.localizer_kind != "learned" && p.localizer_kind != "knn")
      throw UserError(where + ".localizer.kind: must be \"learned\" or \"knn\"");
    p.knn_k = detail::get_or(l, "knn_k", 3);
    p.loc_cfg.conv_widths = detail::get_or(l, "conv_widths", p.loc_cfg.conv_widths);
    p.loc_cfg.fc = detail::get_or(l, "fc", 64);
    p.loc_cfg.epochs = detail::get_or(l, "epochs", 300);
    p.loc_cfg.lr = detail::get_or(l, "lr", 1e-3);
    p.loc_cfg.batch = detail::get_or(l, "batch", 32);
    p.loc_cfg.batchnorm = detail::get_or(l, "batchnorm", true);
  }

  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    detail::check_keys(e, {"bootstrap_B", "ci_level"}, where + ".eval");
    p.bootstrap_B = detail::get_or(e, "bootstrap_B", 1000);
    p.ci_level = detail::get_or(e, "ci_level", 0.95);
  }

  p.seeds = detail::get_or(j, "seeds", std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  if (p.seeds.empty()) throw UserError(where + ".seeds: must not be empty");
  p.jobs = detail::get_or(j, "jobs", 1);
  rc.out_dir = detail::get_or(j, "out_dir", std::string("out"));

  // environment override for quick reproduction runs
  if (const char* env = std::getenv("RADIOMAP_SEED")) {
    try {
      p.seeds = {static_cast<std::uint64_t>(std::stoull(env))};
    } catch (const std::exception&) {
      throw UserError("RADIOMAP_SEED: not an unsigned integer: " + std::string(env));
    }
  }

  try {
    p.scene.validate();
    p.tcfg.validate(p.scene.ru_count());
    if (p.refine_k < 1 || p.refine_k >= p.scene.ru_count())
      throw std::invalid_argument("refine_k must be in [1, ru_count)");
    for (int k : p.k_values)
      if (k < 1 || k >= p.scene.ru_count())
        throw std::invalid_argument("k_values entries must be in [1, ru_count)");
  } catch (const std::exception& e) {
    throw UserError(std::string(where) + ": " + e.what());
  }
  return rc;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UserError("cannot open config " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  std::string text = buf.str();
  // an empty file means all defaults
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) text = "{}";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw UserError(path + ": " + e.what());
  }
  return config_from_json(j, path);
}

/// Canonical JSON of the effective configuration (defaults included), used
/// for manifests and digests.
inline nlohmann::ordered_json config_to_json(const RunConfig& rc) {
  const auto& p = rc.protocol;
  nlohmann::ordered_json j;
  j["scene"] = sim::scene_to_json(p.scene);
  j["samples_per_rp"] = p.samples_per_rp;
  j["split"] = {{"rss_train", p.split.rss_train},
                {"rss_test", p.split.rss_test},
                {"loc_test", p.split.loc_test}};
  j["train"] = {{"lambda_gp", p.tcfg.lambda_gp},   {"lambda_rp", p.tcfg.lambda_rp},
                {"lambda_l1", p.tcfg.lambda_l1},   {"lr", p.tcfg.lr},
                {"n_critic", p.tcfg.n_critic},     {"batch", p.tcfg.batch},
                {"epochs", p.tcfg.epochs},         {"keep", p.tcfg.keep},
                {"checkpoint_every", p.tcfg.checkpoint_every}};
  j["generator"] = {{"conv_widths", p.gcfg.conv_widths},
                    {"trunk_fc", p.gcfg.trunk_fc},
                    {"kernel", p.gcfg.kernel},
                    {"leaky_slope", p.gcfg.leaky_slope},
                    {"batchnorm", p.gcfg.batchnorm}};
  j["critic"] = {{"conv_widths", p.ccfg.conv_widths},
                 {"aux_hidden", p.ccfg.aux_hidden},
                 {"kernel", p.ccfg.kernel},
                 {"leaky_slope", p.ccfg.leaky_slope},
                 {"batchnorm", p.ccfg.batchnorm}};
  j["refine_k"] = p.refine_k;
  j["k_values"] = p.k_values;
  j["localizer"] = {{"kind", p.localizer_kind},
                    {"knn_k", p.knn_k},
                    {"conv_widths", p.loc_cfg.conv_widths},
                    {"fc", p.loc_cfg.fc},
                    {"epochs", p.loc_cfg.epochs},
                    {"lr", p.loc_cfg.lr},
                    {"batch", p.loc_cfg.batch},
                    {"batchnorm", p.loc_cfg.batchnorm}};
  j["eval"] = {{"bootstrap_B", p.bootstrap_B}, {"ci_level", p.ci_level}};
  j["seeds"] = p.seeds;
  j["jobs"] = p.jobs;
  j["out_dir"] = rc.out_dir;
  return j;
}

inline std::string config_digest(const RunConfig& rc) {
  return digest_string(config_to_json(rc).dump());
}

}  // namespace radiomap::cli
