#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "relay/infotheory.hpp"
#include "relay/recnet.hpp"
#include "relay/taskgen.hpp"

namespace relay::ablation {

// `once` overwrites the chosen states with 0.0 right after the update at
// knockout_time and lets the network evolve freely afterwards; `hold` keeps
// them pinned at 0.0 for every remaining step.
enum class KnockoutMode { once, hold };

// Forward pass with the knockout applied to hidden (and, for LSTMs, cell)
// state entries.
std::array<double, recnet::kOutputs> forward_with_knockout(const recnet::NetworkParams& p,
                                                           const taskgen::Episode& episode,
                                                           std::span<const int> knockout_nodes,
                                                           int knockout_time,
                                                           KnockoutMode mode = KnockoutMode::once);

recnet::Accuracy evaluate_with_knockout(const recnet::NetworkParams& p,
                                        const std::vector<taskgen::Episode>& dataset,
                                        std::span<const int> knockout_nodes, int knockout_time,
                                        KnockoutMode mode = KnockoutMode::once);

// accuracy[c](k, j): per-concept accuracy for concept j after knocking out
// the k most-relaying nodes of concept c's ordering, k = 0..12 (k = 0 is the
// unablated reference).
struct SweepResult {
    std::array<Mat, 3> accuracy; // each (kHidden+1) x 3
    int knockout_time = 0;
};

SweepResult knockout_sweep(const recnet::NetworkParams& p,
                           const std::vector<taskgen::Episode>& dataset,
                           const std::array<infotheory::NodeOrdering, 3>& orderings,
                           int knockout_time, KnockoutMode mode = KnockoutMode::once);

// Mean per-concept accuracies over n_samples uniformly random k-subsets.
std::array<double, 3> random_knockout_baseline(const recnet::NetworkParams& p,
                                               const std::vector<taskgen::Episode>& dataset, int k,
                                               int n_samples, int knockout_time, uint64_t seed,
                                               KnockoutMode mode = KnockoutMode::once);

// csv: concept,set_size,acc_a,acc_b,acc_c,baseline
// baseline = overall accuracy averaged over random same-size knockouts.
void write_knockout_csv(const std::string& path, const SweepResult& sweep,
                        std::span<const double> baseline_overall);

} // namespace relay::ablation
