#include "miaudit/config.hpp"

#include <fstream>
#include <sstream>

#include "miaudit/rng.hpp"

namespace miaudit {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

int parse_int(const std::string& v, int line) {
  try {
    size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) fail(line, "trailing characters in integer '" + v + "'");
    return static_cast<int>(x);
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    fail(line, "bad integer '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& v, int line) {
  try {
    size_t pos = 0;
    unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) fail(line, "trailing characters in integer '" + v + "'");
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    fail(line, "bad integer '" + v + "'");
  }
}

double parse_num(const std::string& v, int line) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) fail(line, "trailing characters in number '" + v + "'");
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    fail(line, "bad number '" + v + "'");
  }
}

void apply_trainer_key(TrainerConfig& t, const std::string& key, const std::string& value,
                       int line) {
  if (key == "arch") {
    try {
      t.arch = parse_arch(value);
    } catch (const std::invalid_argument& e) {
      fail(line, e.what());
    }
  } else if (key == "hidden") {
    t.hidden = parse_int(value, line);
  } else if (key == "learning_rate") {
    t.learning_rate = parse_num(value, line);
  } else if (key == "epochs") {
    t.epochs = parse_int(value, line);
  } else if (key == "weight_decay") {
    t.weight_decay = parse_num(value, line);
  } else {
    fail(line, "unknown key '" + key + "'");
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  std::string section;
  AttackEntry* attack = nullptr;

  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    size_t hash = s.find('#');
    if (hash != std::string::npos) s = trim(s.substr(0, hash));
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      attack = nullptr;
      if (section.rfind("attack", 0) == 0) {
        std::string name = trim(section.substr(6));
        if (name.empty()) fail(line, "attack section needs a name");
        for (const AttackEntry& e : cfg.attacks)
          if (e.name == name) fail(line, "duplicate attack section '" + name + "'");
        AttackEntry entry;
        entry.name = name;
        // The label itself may name the method; otherwise a `method` key must.
        try {
          entry.cfg.method = parse_attack(name);
          entry.method_resolved = true;
        } catch (const std::invalid_argument&) {
          entry.method_resolved = false;
        }
        cfg.attacks.push_back(entry);
        attack = &cfg.attacks.back();
        section = "attack";
      } else if (section == "adversary") {
        cfg.adversary_given = true;
        cfg.adversary = cfg.challenger;  // start from challenger's values
      } else if (section != "data" && section != "challenger" && section != "run" &&
                 section != "threshold" && section != "mcmc") {
        fail(line, "unknown section '" + section + "'");
      }
      continue;
    }

    size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) fail(line, "expected 'key = value'");
    if (section.empty()) fail(line, "key outside any section");

    if (section == "data") {
      if (key == "kind") {
        if (value != "sbm" && value != "iid") fail(line, "kind must be sbm or iid");
        cfg.data.kind = value;
      } else if (key == "file") {
        cfg.data.file = value;
      } else if (key == "nodes") {
        cfg.data.spec.n = parse_int(value, line);
      } else if (key == "classes") {
        cfg.data.spec.num_classes = parse_int(value, line);
      } else if (key == "p_in") {
        cfg.data.spec.p_in = parse_num(value, line);
      } else if (key == "p_out") {
        cfg.data.spec.p_out = parse_num(value, line);
      } else if (key == "feature_dim") {
        cfg.data.spec.feature_dim = parse_int(value, line);
      } else if (key == "class_radius") {
        cfg.data.spec.class_radius = parse_num(value, line);
      } else if (key == "noise_std") {
        cfg.data.spec.noise_std = parse_num(value, line);
      } else if (key == "seed") {
        cfg.data.spec.seed = parse_u64(value, line);
        cfg.data.seed_given = true;
      } else {
        fail(line, "unknown key '" + key + "'");
      }
    } else if (section == "challenger") {
      if (key == "train_fraction") {
        cfg.train_fraction = parse_num(value, line);
      } else {
        apply_trainer_key(cfg.challenger, key, value, line);
        if (!cfg.adversary_given) cfg.adversary = cfg.challenger;
      }
    } else if (section == "adversary") {
      if (key == "shadow_models") {
        cfg.shadow_models = parse_int(value, line);
      } else {
        apply_trainer_key(cfg.adversary, key, value, line);
      }
    } else if (section == "attack") {
      AttackConfig& a = attack->cfg;
      if (key == "method") {
        try {
          a.method = parse_attack(value);
          attack->method_resolved = true;
        } catch (const std::invalid_argument& e) {
          fail(line, e.what());
        }
      } else if (key == "mode") {
        try {
          a.mode = parse_mode(value);
        } catch (const std::invalid_argument& e) {
          fail(line, e.what());
        }
      } else if (key == "prior") {
        a.prior = parse_num(value, line);
      } else if (key == "alpha") {
        if (value == "auto") {
          attack->alpha_auto = true;
        } else {
          a.alpha = parse_num(value, line);
          attack->alpha_auto = false;
        }
      } else if (key == "gamma") {
        a.gamma = parse_num(value, line);
      } else if (key == "z_fraction") {
        a.z_fraction = parse_num(value, line);
      } else if (key == "mask_samples") {
        a.mask_samples = parse_int(value, line);
      } else if (key == "sampler") {
        try {
          a.sampler = parse_sampler(value);
        } catch (const std::invalid_argument& e) {
          fail(line, e.what());
        }
      } else if (key == "variance_floor") {
        a.lira_variance_floor = parse_num(value, line);
      } else if (key == "depth") {
        a.neighborhood_depth = parse_int(value, line);
      } else {
        fail(line, "unknown key '" + key + "'");
      }
    } else if (section == "run") {
      if (key == "repetitions") {
        cfg.run.repetitions = parse_int(value, line);
      } else if (key == "seed") {
        cfg.run.seed = parse_u64(value, line);
      } else if (key == "eval_per_side") {
        cfg.run.eval_per_side = parse_int(value, line);
      } else if (key == "output") {
        cfg.run.output = value;
      } else if (key == "jobs") {
        cfg.run.jobs = parse_int(value, line);
      } else {
        fail(line, "unknown key '" + key + "'");
      }
    } else if (section == "threshold") {
      if (key == "target_fpr") {
        cfg.threshold.target_fpr = parse_num(value, line);
      } else if (key == "simulated_targets") {
        cfg.threshold.simulated_targets = parse_int(value, line);
      } else if (key == "fresh_targets") {
        cfg.threshold.fresh_targets = parse_int(value, line);
      } else if (key == "rule") {
        if (value != "mean" && value != "max") fail(line, "rule must be mean or max");
        cfg.threshold.rule = value;
      } else {
        fail(line, "unknown key '" + key + "'");
      }
    } else if (section == "mcmc") {
      if (key == "burn_in") {
        cfg.mcmc.burn_in = parse_int(value, line);
      } else if (key == "thinning") {
        cfg.mcmc.thinning = parse_int(value, line);
      } else if (key == "samples") {
        cfg.mcmc.samples = parse_int(value, line);
      } else if (key == "flip_fraction") {
        cfg.mcmc.flip_fraction = parse_num(value, line);
      } else if (key == "target_node") {
        cfg.mcmc.target_node = parse_int(value, line);
      } else {
        fail(line, "unknown key '" + key + "'");
      }
    }
  }

  if (!cfg.data.seed_given) cfg.data.spec.seed = derive_seed(cfg.run.seed, 0xda7aULL);
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

void ExperimentConfig::validate() const {
  // A config used only for signal scoring may omit [data] entirely.
  if (data.file.empty() && data.spec.n != 0) {
    try {
      data.spec.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw ConfigError("train_fraction must lie in (0,1)");
  if (shadow_models < 2 || shadow_models % 2 != 0)
    throw ConfigError("shadow_models must be even and >= 2");
  if (run.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (run.eval_per_side < 0) throw ConfigError("eval_per_side must be nonnegative");
  if (run.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (challenger.hidden < 0 || adversary.hidden < 0) throw ConfigError("hidden must be nonnegative");
  if (challenger.epochs < 1 || adversary.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (challenger.learning_rate < 0.0 || adversary.learning_rate < 0.0)
    throw ConfigError("learning_rate must be nonnegative");
  for (const AttackEntry& e : attacks) {
    if (!e.method_resolved)
      throw ConfigError("attack " + e.name + ": name is not a method; add a 'method = ...' key");
    try {
      e.cfg.validate();
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(std::string("attack ") + e.name + ": " + ex.what());
    }
  }
  if (threshold.target_fpr <= 0.0 || threshold.target_fpr > 1.0)
    throw ConfigError("target_fpr must lie in (0,1]");
  if (threshold.simulated_targets < 1 || threshold.fresh_targets < 1)
    throw ConfigError("threshold counts must be >= 1");
  if (mcmc.burn_in < 0 || mcmc.thinning < 1 || mcmc.samples < 1)
    throw ConfigError("mcmc parameters out of range");
  if (mcmc.flip_fraction < 0.0 || mcmc.flip_fraction > 1.0)
    throw ConfigError("mcmc flip_fraction must lie in [0,1]");
  if (mcmc.target_node < 0) throw ConfigError("mcmc target_node must be nonnegative");
}

Graph ExperimentConfig::make_graph() const {
  if (!data.file.empty()) return load_graph(data.file);
  if (data.spec.n == 0) throw ConfigError("this command needs a [data] section");
  return data.kind == "iid" ? gen_iid_dataset(data.spec) : gen_sbm_graph(data.spec);
}

}  // namespace miaudit
