#pragma once

#include <string>
#include <vector>

#include "relay/recnet.hpp"
#include "relay/taskgen.hpp"

namespace relay::experiment {

struct ExperimentConfig {
    std::vector<taskgen::Task> tasks{taskgen::Task::memory};
    std::vector<recnet::Arch> archs{recnet::Arch::rnn, recnet::Arch::gru, recnet::Arch::lstm};
    std::vector<taskgen::DelayRegime> regimes{taskgen::DelayRegime::uniform_random()};
    int replicates = 5;
    uint64_t base_seed = 1;
    recnet::TrainConfig train;
    std::string output_dir = "out";
    int workers = 0; // 0 = hardware concurrency

    int eval_episodes = 400;      // per-delay generalization datasets
    int analysis_episodes = 800;  // balanced analysis dataset
    int analysis_delay = 5;       // fixed evaluation delay of the analysis dataset
    int knockout_baseline_samples = 50;
    int removal_baseline_samples = 50;
};

ExperimentConfig load_config(const std::string& path);

struct CellKey {
    taskgen::Task task;
    recnet::Arch arch;
    taskgen::DelayRegime regime;
    int replicate = 0;

    std::string dir() const;  // "memory/rnn/rand15/rep0"
};

struct ManifestFile {
    std::string path; // relative to the output directory
    uint64_t checksum = 0;
};

struct CellRecord {
    CellKey key;
    uint64_t seed = 0;
    std::string status; // "ok" or "failed"
    double final_accuracy = 0.0;
    int epochs_used = 0;
    int restarts = 0;
    std::vector<ManifestFile> files;
};

struct Manifest {
    uint64_t base_seed = 0;
    std::string output_dir;
    std::vector<CellRecord> cells;
};

// Stable per-cell seed: replicates stay reproducible under partial reruns.
uint64_t cell_seed(uint64_t base_seed, const CellKey& key);

// Trains and analyzes every requested cell, skipping cells already complete
// in an existing manifest (verified by checksum). The manifest is rewritten
// after every finished cell. Training failures are recorded and the sweep
// continues.
Manifest run_experiment(const ExperimentConfig& cfg);

bool all_cells_ok(const Manifest& m);

void save_manifest(const std::string& path, const Manifest& m);
Manifest load_manifest(const std::string& path);

// Aggregate tables across replicates: per-delay accuracy mean +- standard
// error, mean r/overlap per regime, averaged usage histograms. Written to
// <out_dir>/.
void summarize(const Manifest& m, const std::string& out_dir);

// Analysis pipeline for one trained network (relay matrices, orderings,
// knockouts, temporal tracking, latent scores), writing CSVs into `dir`.
// Returns the files written, paths relative to `dir`.
std::vector<ManifestFile> analyze_network(const recnet::NetworkParams& params, taskgen::Task task,
                                          const CellKey& key, uint64_t seed,
                                          const ExperimentConfig& cfg, const std::string& dir);

} // namespace relay::experiment
