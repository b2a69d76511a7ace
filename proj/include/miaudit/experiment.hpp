#pragma once

#include <iosfwd>
#include <string>

#include "miaudit/config.hpp"

namespace miaudit {

/// Writes the dataset described by [data] to `path` in the graph text
/// format.
void run_gen(const ExperimentConfig& cfg, const std::string& path, std::ostream& log);

/// Full game loop: per repetition, sample a training half, train the
/// target, attack it with every configured attack, and emit score/ROC
/// CSVs plus a summary table. Outputs are byte-identical across runs with
/// the same config.
void run_audit(const ExperimentConfig& cfg, std::ostream& log);

/// Total-variation distance between long-run chain samples and the exact
/// enumeration of the stationary distribution (small graphs only).
/// Returns the TV distance.
double run_mcmc_check(const ExperimentConfig& cfg, std::ostream& log);

/// Estimates decision thresholds on simulated targets, then reports the
/// realized rates on fresh targets at the estimated threshold.
void run_threshold(const ExperimentConfig& cfg, std::ostream& log);

/// Runs a signal-based attack on an externally produced signals CSV.
void run_attack_signals(const std::string& signals_path, const AttackEntry& attack,
                        const std::string& out_path, std::ostream& log);

}  // namespace miaudit
