#pragma once

#include <array>
#include <string>
#include <vector>

#include "relay/common.hpp"

namespace relay::taskgen {

enum class Task { memory, block };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

// One binary fact per output channel. For the block task the mapping is
// fixed: a = direction (-1 left, +1 right), b = size (-1 small, +1 large),
// c = brightness (-1 dark, +1 bright).
struct ConceptLabels {
    int a = 1;
    int b = 1;
    int c = 1;

    int operator[](int concept_idx) const { return concept_idx == 0 ? a : concept_idx == 1 ? b : c; }
    bool operator==(const ConceptLabels&) const = default;
};

// index 0..7, bit 2 -> a, bit 1 -> b, bit 0 -> c; bit set means +1
ConceptLabels labels_from_index(int idx);
int state_index(ConceptLabels labels);

struct DelayRegime {
    enum class Kind { fixed, uniform_random, fixed_eval };

    Kind kind = Kind::uniform_random;
    int delay = 0; // fixed: 1..5, fixed_eval: 0..9, ignored for uniform_random

    static DelayRegime fixed(int k);
    static DelayRegime uniform_random(); // delay drawn per episode from [1,5]
    static DelayRegime fixed_eval(int k); // evaluation only, never training

    // "fixed3", "rand15", "eval7"
    std::string name() const;
    static DelayRegime from_name(const std::string& s);

    bool operator==(const DelayRegime&) const = default;
};

struct Episode {
    Mat inputs; // T x D
    ConceptLabels labels;
    int delay = 0;
    std::vector<int> injection_times; // memory task only, 1-indexed

    int steps() const { return inputs.rows; }
    int channels() const { return inputs.cols; }
};

inline constexpr int kMemoryChannels = 3;
inline constexpr std::array<int, 3> kInjectionTimes{4, 7, 10};

inline constexpr int kBlockPixels = 16;
inline constexpr int kBlockObservationSteps = 10;
inline constexpr int kBlockSmallSize = 2;
inline constexpr int kBlockLargeSize = 4;
inline constexpr double kBlockBrightValue = 1.0;
inline constexpr double kBlockDarkValue = 0.4;

// Three +/-1 pulses on dedicated channels at the given 1-indexed times,
// zeros elsewhere; `delay` trailing all-zero rows.
Episode generate_memory_episode(ConceptLabels labels, int delay,
                                std::array<int, 3> injection_times, uint64_t rng_seed);

// 16-pixel circular 1-D camera, 10 observation frames of a moving block
// followed by `delay` all-zero frames. rng_seed selects the start position.
Episode generate_block_episode(ConceptLabels labels, int delay, uint64_t rng_seed);

// Balanced dataset: every one of the 8 label combinations appears exactly
// n_episodes/8 times, episode order shuffled deterministically.
std::vector<Episode> generate_dataset(Task task, int n_episodes, DelayRegime regime,
                                      uint64_t rng_seed);

// columns: episode_id,t,ch0..chD-1,label_a,label_b,label_c,delay
void write_dataset_csv(const std::string& path, const std::vector<Episode>& episodes);

} // namespace relay::taskgen
