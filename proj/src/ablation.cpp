#include "relay/ablation.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace relay::ablation {

using recnet::kHidden;
using recnet::kOutputs;

std::array<double, kOutputs> forward_with_knockout(const recnet::NetworkParams& p,
                                                   const taskgen::Episode& episode,
                                                   std::span<const int> knockout_nodes,
                                                   int knockout_time, KnockoutMode mode) {
    const Mat& x = episode.inputs;
    if (knockout_time < 0 || knockout_time >= x.rows)
        throw std::invalid_argument("knockout_time out of range");
    for (int n : knockout_nodes)
        if (n < 0 || n >= kHidden) throw std::invalid_argument("knockout node index out of range");

    recnet::StepState s;
    for (int t = 0; t < x.rows; ++t) {
        recnet::step(p, x.row(t), s);
        const bool zero_now = t == knockout_time || (mode == KnockoutMode::hold && t > knockout_time);
        if (zero_now) {
            for (int n : knockout_nodes) {
                s.h[n] = 0.0;
                s.c[n] = 0.0;
            }
        }
    }
    return recnet::readout(p, s.h);
}

recnet::Accuracy evaluate_with_knockout(const recnet::NetworkParams& p,
                                        const std::vector<taskgen::Episode>& dataset,
                                        std::span<const int> knockout_nodes, int knockout_time,
                                        KnockoutMode mode) {
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    std::array<long, 3> correct{};
    for (const auto& ep : dataset) {
        const auto out = forward_with_knockout(p, ep, knockout_nodes, knockout_time, mode);
        for (int o = 0; o < kOutputs; ++o) {
            const int label = ep.labels[o];
            if ((out[o] > 0.0 && label > 0) || (out[o] < 0.0 && label < 0)) ++correct[o];
        }
    }
    recnet::Accuracy acc;
    for (int o = 0; o < kOutputs; ++o)
        acc.per_concept[o] = static_cast<double>(correct[o]) / static_cast<double>(dataset.size());
    acc.overall = (acc.per_concept[0] + acc.per_concept[1] + acc.per_concept[2]) / 3.0;
    return acc;
}

SweepResult knockout_sweep(const recnet::NetworkParams& p,
                           const std::vector<taskgen::Episode>& dataset,
                           const std::array<infotheory::NodeOrdering, 3>& orderings,
                           int knockout_time, KnockoutMode mode) {
    SweepResult res;
    res.knockout_time = knockout_time;
    for (int c = 0; c < 3; ++c) {
        const auto& order = orderings[c].removal_order;
        if (order.size() != kHidden)
            throw std::invalid_argument("ordering does not cover all hidden nodes");
        res.accuracy[c] = Mat(kHidden + 1, 3);
        for (int k = 0; k <= kHidden; ++k) {
            // the k most-relaying nodes are the tail of the removal order
            std::vector<int> set(order.end() - k, order.end());
            const auto acc = evaluate_with_knockout(p, dataset, set, knockout_time, mode);
            for (int o = 0; o < 3; ++o) res.accuracy[c](k, o) = acc.per_concept[o];
        }
    }
    return res;
}

std::array<double, 3> random_knockout_baseline(const recnet::NetworkParams& p,
                                               const std::vector<taskgen::Episode>& dataset, int k,
                                               int n_samples, int knockout_time, uint64_t seed,
                                               KnockoutMode mode) {
    if (k < 0 || k > kHidden) throw std::invalid_argument("subset size out of range");
    if (n_samples <= 0) throw std::invalid_argument("n_samples must be positive");

    SplitMix64 rng(seed);
    std::array<double, 3> mean{};
    std::array<int, kHidden> all;
    for (int i = 0; i < kHidden; ++i) all[i] = i;

    for (int s = 0; s < n_samples; ++s) {
        // partial Fisher-Yates: first k entries become the random subset
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(rng.below(static_cast<uint64_t>(kHidden - i)));
            std::swap(all[i], all[j]);
        }
        std::vector<int> subset(all.begin(), all.begin() + k);
        const auto acc = evaluate_with_knockout(p, dataset, subset, knockout_time, mode);
        for (int o = 0; o < 3; ++o) mean[o] += acc.per_concept[o];
    }
    for (int o = 0; o < 3; ++o) mean[o] /= n_samples;
    return mean;
}

void write_knockout_csv(const std::string& path, const SweepResult& sweep,
                        std::span<const double> baseline_overall) {
    if (baseline_overall.size() != static_cast<size_t>(kHidden + 1))
        throw std::invalid_argument("baseline must cover set sizes 0..12");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "concept,set_size,acc_a,acc_b,acc_c,baseline\n";
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k <= kHidden; ++k)
            f << c << ',' << k << ',' << format_double(sweep.accuracy[c](k, 0)) << ','
              << format_double(sweep.accuracy[c](k, 1)) << ','
              << format_double(sweep.accuracy[c](k, 2)) << ','
              << format_double(baseline_overall[k]) << '\n';
}

} // namespace relay::ablation
