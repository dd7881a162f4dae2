// All tunable knobs in one value type, plus JSON load/merge and the effective-
// config echo that simulation reports embed. CLI flags overlay file values,
// which overlay the built-in defaults.
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "spes/types.hpp"

namespace spes {

enum class CsrDenominator : std::uint8_t { InvokedSlots = 0, InvocationCount };

struct RunConfig {
  // Pattern checks
  int n_modes = 3;              // modes considered by the coverage check
  int k_modes = 3;              // modes spanning the dense range
  int dense_constant = 5;       // P90(WT) bound for dense functions (minutes)
  int gamma1 = 3;               // minimum active-run length for successive
  int gamma2 = 5;               // minimum active-run invocation total for successive
  bool successive_requires_both = false;  // AND the two successive conditions
  double alpha = 0.5;           // cold-start weight in the strategy duel, in (0,1)
  double appro_coverage = 0.9;  // top-n mode coverage threshold
  double cv_limit = 0.01;       // coefficient-of-variation bound for regular
  double warm_ratio = 0.001;    // idle-slot budget for always-warm
  int min_wt_samples = 2;       // waiting times needed before distribution checks

  // Slacking
  double mode_tolerance = 0.01;    // |v - mode| <= tolerance*mode counts as near-mode
  double small_wt_threshold = 0.1; // v < threshold*mode counts as small

  // Correlation
  double tcor_threshold = 0.5;  // minimum lagged co-occurrence for a link
  int tcor_max_lag = 10;        // largest lag mined (minutes)
  double deactivation_gap = 0.3;  // online: max_cor - cor above this deactivates
  double reactivation_gap = 0.1;  // online: max_cor - cor within this reactivates

  // Prediction / provisioning
  int theta_prewarm = 2;          // preload window half-width (minutes)
  int possible_range_limit = 10;  // spread beyond which possible values stay discrete
  int min_online_wts = 5;         // online samples needed before adjusting
  std::map<FunctionCategory, int> theta_givenup = {
      {FunctionCategory::Dense, 5},
      {FunctionCategory::Pulsed, 5},
  };
  int theta_givenup_default = 1;
  int givenup_multiplier = 1;

  // Training windows
  int validation_days = 2;  // trailing training days used to validate strategies

  // Policy
  std::string policy = "spes";  // "spes" or "keepalive"
  int keepalive_minutes = 10;
  bool carry_warm = false;  // start the memory set with always-warm functions loaded

  // Metrics
  CsrDenominator csr_denominator = CsrDenominator::InvokedSlots;
  bool emcr_pooled = false;  // pooled ratio instead of macro average over slots

  // Ablations
  bool disable_corr = false;         // drop the correlated strategy during training
  bool disable_online_corr = false;  // no trackers for unseen functions
  bool disable_forgetting = false;   // skip suffix-window retries
  bool disable_adjusting = false;    // freeze predictive values during simulation

  // Execution
  std::uint64_t seed = 42;
  int workers = 1;

  int theta_givenup_for(FunctionCategory c) const {
    auto it = theta_givenup.find(c);
    int base = it != theta_givenup.end() ? it->second : theta_givenup_default;
    return base * givenup_multiplier;
  }

  void validate() const {
    if (n_modes < 1 || k_modes < 1) throw std::invalid_argument("config: modes must be >= 1");
    if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("config: alpha must be in (0,1)");
    if (appro_coverage <= 0.0 || appro_coverage > 1.0)
      throw std::invalid_argument("config: appro_coverage must be in (0,1]");
    if (theta_prewarm < 0) throw std::invalid_argument("config: theta_prewarm must be >= 0");
    if (givenup_multiplier < 1) throw std::invalid_argument("config: givenup_multiplier must be >= 1");
    if (theta_givenup_default < 1) throw std::invalid_argument("config: theta_givenup must be >= 1");
    for (auto [cat, v] : theta_givenup)
      if (v < 1) throw std::invalid_argument("config: theta_givenup must be >= 1");
    if (tcor_max_lag < 0) throw std::invalid_argument("config: tcor_max_lag must be >= 0");
    if (validation_days < 1) throw std::invalid_argument("config: validation_days must be >= 1");
    if (keepalive_minutes < 1) throw std::invalid_argument("config: keepalive_minutes must be >= 1");
    if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    if (policy != "spes" && policy != "keepalive")
      throw std::invalid_argument("config: policy must be 'spes' or 'keepalive'");
  }
};

// ---------------------------------------------------------------------------
// JSON mapping. Keys use the long-option spelling of the CLI.

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json g;
  for (auto [cat, v] : c.theta_givenup) g[to_string(cat)] = v;
  g["default"] = c.theta_givenup_default;
  return nlohmann::json{
      {"n_modes", c.n_modes},
      {"k_modes", c.k_modes},
      {"dense_constant", c.dense_constant},
      {"gamma1", c.gamma1},
      {"gamma2", c.gamma2},
      {"successive_requires_both", c.successive_requires_both},
      {"alpha", c.alpha},
      {"appro_coverage", c.appro_coverage},
      {"cv_limit", c.cv_limit},
      {"warm_ratio", c.warm_ratio},
      {"min_wt_samples", c.min_wt_samples},
      {"mode_tolerance", c.mode_tolerance},
      {"small_wt_threshold", c.small_wt_threshold},
      {"tcor_threshold", c.tcor_threshold},
      {"tcor_max_lag", c.tcor_max_lag},
      {"deactivation_gap", c.deactivation_gap},
      {"reactivation_gap", c.reactivation_gap},
      {"theta_prewarm", c.theta_prewarm},
      {"possible_range_limit", c.possible_range_limit},
      {"min_online_wts", c.min_online_wts},
      {"theta_givenup", g},
      {"givenup_multiplier", c.givenup_multiplier},
      {"validation_days", c.validation_days},
      {"policy", c.policy},
      {"keepalive_minutes", c.keepalive_minutes},
      {"carry_warm", c.carry_warm},
      {"csr_denominator",
       c.csr_denominator == CsrDenominator::InvokedSlots ? "invoked_slots" : "invocation_count"},
      {"emcr_pooled", c.emcr_pooled},
      {"disable_corr", c.disable_corr},
      {"disable_online_corr", c.disable_online_corr},
      {"disable_forgetting", c.disable_forgetting},
      {"disable_adjusting", c.disable_adjusting},
      {"seed", c.seed},
  };
}

// Applies the keys present in j on top of c; unknown keys are an error so typos
// in config files surface immediately.
inline void merge_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const nlohmann::json& v = it.value();
    if (k == "n_modes") c.n_modes = v.get<int>();
    else if (k == "k_modes") c.k_modes = v.get<int>();
    else if (k == "dense_constant") c.dense_constant = v.get<int>();
    else if (k == "gamma1") c.gamma1 = v.get<int>();
    else if (k == "gamma2") c.gamma2 = v.get<int>();
    else if (k == "successive_requires_both") c.successive_requires_both = v.get<bool>();
    else if (k == "alpha") c.alpha = v.get<double>();
    else if (k == "appro_coverage") c.appro_coverage = v.get<double>();
    else if (k == "cv_limit") c.cv_limit = v.get<double>();
    else if (k == "warm_ratio") c.warm_ratio = v.get<double>();
    else if (k == "min_wt_samples") c.min_wt_samples = v.get<int>();
    else if (k == "mode_tolerance") c.mode_tolerance = v.get<double>();
    else if (k == "small_wt_threshold") c.small_wt_threshold = v.get<double>();
    else if (k == "tcor_threshold") c.tcor_threshold = v.get<double>();
    else if (k == "tcor_max_lag") c.tcor_max_lag = v.get<int>();
    else if (k == "deactivation_gap") c.deactivation_gap = v.get<double>();
    else if (k == "reactivation_gap") c.reactivation_gap = v.get<double>();
    else if (k == "theta_prewarm") c.theta_prewarm = v.get<int>();
    else if (k == "possible_range_limit") c.possible_range_limit = v.get<int>();
    else if (k == "min_online_wts") c.min_online_wts = v.get<int>();
    else if (k == "givenup_multiplier") c.givenup_multiplier = v.get<int>();
    else if (k == "validation_days") c.validation_days = v.get<int>();
    else if (k == "policy") c.policy = v.get<std::string>();
    else if (k == "keepalive_minutes") c.keepalive_minutes = v.get<int>();
    else if (k == "carry_warm") c.carry_warm = v.get<bool>();
    else if (k == "emcr_pooled") c.emcr_pooled = v.get<bool>();
    else if (k == "disable_corr") c.disable_corr = v.get<bool>();
    else if (k == "disable_online_corr") c.disable_online_corr = v.get<bool>();
    else if (k == "disable_forgetting") c.disable_forgetting = v.get<bool>();
    else if (k == "disable_adjusting") c.disable_adjusting = v.get<bool>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "workers") c.workers = v.get<int>();
    else if (k == "csr_denominator") {
      std::string s = v.get<std::string>();
      if (s == "invoked_slots") c.csr_denominator = CsrDenominator::InvokedSlots;
      else if (s == "invocation_count") c.csr_denominator = CsrDenominator::InvocationCount;
      else throw std::invalid_argument("config: csr_denominator must be invoked_slots or invocation_count");
    } else if (k == "theta_givenup") {
      if (!v.is_object()) throw std::invalid_argument("config: theta_givenup must be an object");
      for (auto g = v.begin(); g != v.end(); ++g) {
        if (g.key() == "default") {
          c.theta_givenup_default = g.value().get<int>();
        } else if (auto cat = parse_category(g.key())) {
          c.theta_givenup[*cat] = g.value().get<int>();
        } else {
          throw std::invalid_argument("config: unknown category in theta_givenup: " + g.key());
        }
      }
    } else {
      throw std::invalid_argument("config: unknown key '" + k + "'");
    }
  }
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config: " + path + ": " + e.what());
  }
  merge_json(base, j);
  return base;
}

}  // namespace spes
