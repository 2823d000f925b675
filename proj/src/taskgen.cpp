#include "relay/taskgen.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace relay::taskgen {

std::string to_string(Task t) { return t == Task::memory ? "memory" : "block"; }

Task task_from_string(const std::string& s) {
    if (s == "memory") return Task::memory;
    if (s == "block") return Task::block;
    throw std::invalid_argument("unknown task: " + s);
}

ConceptLabels labels_from_index(int idx) {
    if (idx < 0 || idx > 7) throw std::invalid_argument("label index out of range");
    ConceptLabels l;
    l.a = (idx & 4) ? 1 : -1;
    l.b = (idx & 2) ? 1 : -1;
    l.c = (idx & 1) ? 1 : -1;
    return l;
}

int state_index(ConceptLabels l) {
    return (l.a > 0 ? 4 : 0) + (l.b > 0 ? 2 : 0) + (l.c > 0 ? 1 : 0);
}

DelayRegime DelayRegime::fixed(int k) {
    if (k < 1 || k > 5) throw std::invalid_argument("fixed training delay must be in [1,5]");
    return {Kind::fixed, k};
}

DelayRegime DelayRegime::uniform_random() { return {Kind::uniform_random, 0}; }

DelayRegime DelayRegime::fixed_eval(int k) {
    if (k < 0 || k > 9) throw std::invalid_argument("evaluation delay must be in [0,9]");
    return {Kind::fixed_eval, k};
}

std::string DelayRegime::name() const {
    switch (kind) {
    case Kind::fixed: return "fixed" + std::to_string(delay);
    case Kind::uniform_random: return "rand15";
    case Kind::fixed_eval: return "eval" + std::to_string(delay);
    }
    return "?";
}

DelayRegime DelayRegime::from_name(const std::string& s) {
    if (s == "rand15") return uniform_random();
    if (s.rfind("fixed", 0) == 0) return fixed(std::stoi(s.substr(5)));
    if (s.rfind("eval", 0) == 0) return fixed_eval(std::stoi(s.substr(4)));
    throw std::invalid_argument("unknown delay regime: " + s);
}

Episode generate_memory_episode(ConceptLabels labels, int delay,
                                std::array<int, 3> injection_times, uint64_t /*rng_seed*/) {
    if (delay < 0) throw std::invalid_argument("delay must be >= 0");
    if (!(injection_times[0] >= 1 && injection_times[0] < injection_times[1] &&
          injection_times[1] < injection_times[2]))
        throw std::invalid_argument("injection times must be strictly increasing and >= 1");

    const int steps = injection_times[2] + delay;
    Episode ep;
    ep.inputs = Mat(steps, kMemoryChannels);
    ep.labels = labels;
    ep.delay = delay;
    ep.injection_times.assign(injection_times.begin(), injection_times.end());
    for (int i = 0; i < 3; ++i)
        ep.inputs(injection_times[i] - 1, i) = static_cast<double>(labels[i]);
    return ep;
}

Episode generate_block_episode(ConceptLabels labels, int delay, uint64_t rng_seed) {
    if (delay < 0) throw std::invalid_argument("delay must be >= 0");

    SplitMix64 rng(rng_seed);
    const int start = static_cast<int>(rng.below(kBlockPixels));
    const int dir = labels.a;
    const int size = labels.b > 0 ? kBlockLargeSize : kBlockSmallSize;
    const double value = labels.c > 0 ? kBlockBrightValue : kBlockDarkValue;

    Episode ep;
    ep.inputs = Mat(kBlockObservationSteps + delay, kBlockPixels);
    ep.labels = labels;
    ep.delay = delay;
    for (int t = 0; t < kBlockObservationSteps; ++t) {
        const int pos = ((start + dir * t) % kBlockPixels + kBlockPixels) % kBlockPixels;
        for (int k = 0; k < size; ++k)
            ep.inputs(t, (pos + k) % kBlockPixels) = value;
    }
    return ep;
}

std::vector<Episode> generate_dataset(Task task, int n_episodes, DelayRegime regime,
                                      uint64_t rng_seed) {
    if (n_episodes <= 0 || n_episodes % 8 != 0)
        throw std::invalid_argument("n_episodes must be a positive multiple of 8");

    SplitMix64 rng(rng_seed);
    std::vector<Episode> out;
    out.reserve(n_episodes);
    for (int i = 0; i < n_episodes; ++i) {
        const ConceptLabels labels = labels_from_index(i % 8);
        int delay = regime.delay;
        if (regime.kind == DelayRegime::Kind::uniform_random)
            delay = 1 + static_cast<int>(rng.below(5));
        const uint64_t ep_seed = rng.next();
        if (task == Task::memory)
            out.push_back(generate_memory_episode(labels, delay, kInjectionTimes, ep_seed));
        else
            out.push_back(generate_block_episode(labels, delay, ep_seed));
    }
    // Fisher-Yates with the same stream, so the whole dataset is a pure
    // function of (task, n_episodes, regime, rng_seed).
    for (int i = n_episodes - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<uint64_t>(i) + 1));
        std::swap(out[i], out[j]);
    }
    return out;
}

void write_dataset_csv(const std::string& path, const std::vector<Episode>& episodes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    const int channels = episodes.empty() ? 0 : episodes.front().channels();
    f << "episode_id,t";
    for (int c = 0; c < channels; ++c) f << ",ch" << c;
    f << ",label_a,label_b,label_c,delay\n";
    for (size_t e = 0; e < episodes.size(); ++e) {
        const Episode& ep = episodes[e];
        for (int t = 0; t < ep.steps(); ++t) {
            f << e << ',' << t;
            for (int c = 0; c < ep.channels(); ++c) f << ',' << format_double(ep.inputs(t, c));
            f << ',' << ep.labels.a << ',' << ep.labels.b << ',' << ep.labels.c << ','
              << ep.delay << '\n';
        }
    }
}

} // namespace relay::taskgen
