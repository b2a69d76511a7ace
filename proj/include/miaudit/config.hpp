#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "miaudit/attacks.hpp"
#include "miaudit/models.hpp"
#include "miaudit/synthgen.hpp"

namespace miaudit {

/// Raised for malformed or inconsistent configuration; maps to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataConfig {
  std::string file;      // load instead of generating when nonempty
  std::string kind = "sbm";  // sbm | iid
  SbmSpec spec;
  bool seed_given = false;
};

struct TrainerConfig {
  Arch arch = Arch::kGcn2;
  int hidden = 16;
  double learning_rate = 0.2;
  int epochs = 200;
  double weight_decay = 0.0;

  TrainConfig to_train_config(uint64_t init_seed) const {
    return TrainConfig{learning_rate, epochs, weight_decay, hidden, init_seed};
  }
};

struct AttackEntry {
  std::string name;
  AttackConfig cfg;
  bool alpha_auto = false;      // offline scaling picked on a simulated target
  bool method_resolved = true;  // name or a method key identified the attack
};

struct RunConfig {
  int repetitions = 1;
  uint64_t seed = 1;
  int eval_per_side = 0;  // per-class evaluation samples; 0 takes all, balanced
  std::string output = "out";
  int jobs = 1;
};

struct ThresholdRunConfig {
  double target_fpr = 0.01;
  int simulated_targets = 10;
  int fresh_targets = 5;
  std::string rule = "mean";  // mean | max
};

struct McmcCheckConfig {
  int burn_in = 1000;
  int thinning = 500;
  int samples = 50000;
  double flip_fraction = 0.0;  // 0 = single-bit proposals
  int target_node = 0;
};

struct ExperimentConfig {
  DataConfig data;
  TrainerConfig challenger;
  TrainerConfig adversary;
  bool adversary_given = false;
  double train_fraction = 0.5;  // challenger's training split
  int shadow_models = 8;
  std::vector<AttackEntry> attacks;
  RunConfig run;
  ThresholdRunConfig threshold;
  McmcCheckConfig mcmc;

  void validate() const;
  /// The dataset the config describes (generated or loaded).
  Graph make_graph() const;
};

// Line-oriented format: "[section]" headers followed by "key = value"
// lines; '#' starts a comment. Unknown sections or keys are errors.
// Sections: data, challenger, adversary, run, threshold, mcmc, and one
// "attack <method>" section per configured attack.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace miaudit
