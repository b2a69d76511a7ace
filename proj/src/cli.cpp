#include "miaudit/cli.hpp"

#include <iostream>
#include <map>
#include <string>

#include "miaudit/experiment.hpp"
#include "miaudit/rng.hpp"

namespace miaudit {

namespace {

const char* kUsage =
    "usage: miaudit <command> [flags]\n"
    "\n"
    "commands:\n"
    "  gen             write the configured dataset to --out\n"
    "  audit           run the full attack evaluation pipeline\n"
    "  mcmc-check      compare chain samples against exact enumeration\n"
    "  threshold       estimate decision thresholds on simulated targets\n"
    "  attack-signals  score an externally produced signals CSV\n"
    "\n"
    "flags:\n"
    "  --config PATH   experiment configuration (required)\n"
    "  --seed N        override [run] seed\n"
    "  --out PATH      output file (gen, attack-signals) or directory (audit)\n"
    "  --jobs N        override [run] jobs\n"
    "  --signals PATH  input signals CSV (attack-signals)\n";

struct Flags {
  std::map<std::string, std::string> values;

  const std::string* get(const std::string& name) const {
    auto it = values.find(name);
    return it == values.end() ? nullptr : &it->second;
  }
  std::string require(const std::string& name) const {
    const std::string* v = get(name);
    if (!v) throw ConfigError("missing required flag --" + name);
    return *v;
  }
};

Flags parse_flags(int argc, const char* const* argv, int first) {
  Flags flags;
  for (int i = first; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg.rfind("--", 0) != 0) throw ConfigError("unexpected argument: " + arg);
    std::string name = arg.substr(2);
    if (name != "config" && name != "seed" && name != "out" && name != "jobs" && name != "signals")
      throw ConfigError("unknown flag: " + arg);
    if (i + 1 >= argc) throw ConfigError("flag " + arg + " needs a value");
    flags.values[name] = argv[++i];
  }
  return flags;
}

uint64_t parse_u64_flag(const std::string& v) {
  try {
    size_t pos = 0;
    unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw ConfigError("bad numeric flag value: " + v);
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError("bad numeric flag value: " + v);
  }
}

ExperimentConfig load_config(const Flags& flags) {
  ExperimentConfig cfg = parse_config_file(flags.require("config"));
  if (const std::string* seed = flags.get("seed")) {
    cfg.run.seed = parse_u64_flag(*seed);
    if (!cfg.data.seed_given) cfg.data.spec.seed = derive_seed(cfg.run.seed, 0xda7aULL);
  }
  if (const std::string* jobs = flags.get("jobs")) {
    cfg.run.jobs = static_cast<int>(parse_u64_flag(*jobs));
    if (cfg.run.jobs < 1) throw ConfigError("jobs must be >= 1");
  }
  return cfg;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  if (argc < 2) {
    std::cerr << kUsage;
    return 2;
  }
  std::string command = argv[1];
  try {
    Flags flags = parse_flags(argc, argv, 2);
    if (command == "gen") {
      ExperimentConfig cfg = load_config(flags);
      run_gen(cfg, flags.require("out"), std::cout);
    } else if (command == "audit") {
      ExperimentConfig cfg = load_config(flags);
      if (const std::string* out = flags.get("out")) cfg.run.output = *out;
      run_audit(cfg, std::cout);
    } else if (command == "mcmc-check") {
      ExperimentConfig cfg = load_config(flags);
      run_mcmc_check(cfg, std::cout);
    } else if (command == "threshold") {
      ExperimentConfig cfg = load_config(flags);
      run_threshold(cfg, std::cout);
    } else if (command == "attack-signals") {
      ExperimentConfig cfg = load_config(flags);
      if (cfg.attacks.size() != 1)
        throw ConfigError("attack-signals: config must contain exactly one [attack ...] section");
      run_attack_signals(flags.require("signals"), cfg.attacks.front(), flags.require("out"),
                         std::cout);
    } else {
      std::cerr << "unknown command: " << command << "\n" << kUsage;
      return 2;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace miaudit
