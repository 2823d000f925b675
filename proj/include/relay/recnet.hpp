#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "relay/common.hpp"
#include "relay/taskgen.hpp"

namespace relay::recnet {

enum class Arch { rnn, gru, lstm };

std::string to_string(Arch a);
Arch arch_from_string(const std::string& s);

inline constexpr int kHidden = 12;
inline constexpr int kOutputs = 3;

// All weights of one network. Gate order: RNN [h], GRU [z, r, n],
// LSTM [i, f, g, o]. wx[g] is kHidden x D, wh[g] is kHidden x kHidden,
// b[g] has kHidden entries. Readout wo is kOutputs x kHidden.
struct NetworkParams {
    Arch arch = Arch::rnn;
    int input_dim = 0;
    std::vector<Mat> wx;
    std::vector<Mat> wh;
    std::vector<std::vector<double>> b;
    Mat wo;
    std::array<double, kOutputs> bo{};

    int gates() const { return arch == Arch::rnn ? 1 : arch == Arch::gru ? 3 : 4; }

    bool operator==(const NetworkParams&) const = default;
};

// Zero-valued parameter set with the right shapes (also the gradient holder).
NetworkParams zeros_like(const NetworkParams& p);
NetworkParams make_params(Arch arch, int input_dim);

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per tensor.
NetworkParams init_params(Arch arch, int input_dim, uint64_t rng_seed);

// Spans over every parameter tensor in a fixed order; params and its
// gradients visit in the same order.
std::vector<std::span<double>> parameter_tensors(NetworkParams& p);
std::vector<std::span<const double>> parameter_tensors(const NetworkParams& p);
size_t parameter_count(const NetworkParams& p);

// Recurrent state advanced one input row at a time. `cell` is used by the
// LSTM only.
struct StepState {
    std::array<double, kHidden> h{};
    std::array<double, kHidden> c{};
};

void step(const NetworkParams& p, const double* x, StepState& s);
std::array<double, kOutputs> readout(const NetworkParams& p, const std::array<double, kHidden>& h);

struct ForwardTrace {
    Mat hidden;                          // T x kHidden
    Mat cell;                            // T x kHidden (LSTM), otherwise 0 x 0
    std::array<double, kOutputs> output; // tanh readout of the final hidden state
};

ForwardTrace forward(const NetworkParams& p, const Mat& inputs);

// Hidden (and, for LSTMs, cell) states for a whole dataset, plus the
// final-step outputs. All episodes must share one length.
struct TraceTensor {
    int n_episodes = 0;
    int n_steps = 0;
    bool has_cell = false;
    std::vector<Mat> hidden; // per episode, T x kHidden
    std::vector<Mat> cell;   // per episode, T x kHidden (LSTM only)
    Mat outputs;             // n_episodes x kOutputs
};

TraceTensor record_traces(const NetworkParams& p, const std::vector<taskgen::Episode>& dataset);

// Mean over episodes and the 3 outputs of (output - target)^2, final step
// only. Accumulates exact reverse-mode gradients into `grads` (zeroed first)
// and returns the batch loss.
double bptt_gradients(const NetworkParams& p, std::span<const taskgen::Episode> batch,
                      std::span<const std::array<double, kOutputs>> targets, NetworkParams& grads);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
};

AdamState make_adam_state(const NetworkParams& p);
void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state,
               const AdamConfig& cfg);

struct TrainConfig {
    AdamConfig adam;
    int batch_size = 64;
    int train_episodes = 800;
    int eval_episodes = 400;
    int max_epochs = 2000;
    int max_restarts = 5;
    double target_accuracy = 0.98;
};

struct TrainReport {
    double final_accuracy = 0.0;
    int epochs_used = 0;
    int restarts = 0;
    std::vector<double> loss_curve; // per-epoch mean training loss, final attempt
};

struct TrainResult {
    NetworkParams params;
    TrainReport report;
};

class TrainingFailed : public std::runtime_error {
public:
    TrainingFailed(std::string msg, TrainReport best)
        : std::runtime_error(std::move(msg)), best_report(std::move(best)) {}
    TrainReport best_report;
};

// Trains until held-out accuracy >= target, restarting with a fresh
// initialization after max_epochs, up to max_restarts extra attempts.
// Fully deterministic under (arch, task, regime, rng_seed, config).
TrainResult train(Arch arch, taskgen::Task task, taskgen::DelayRegime regime, uint64_t rng_seed,
                  const TrainConfig& cfg = {});

struct Accuracy {
    double overall = 0.0;
    std::array<double, 3> per_concept{};
};

// Per-concept accuracy counts sign(output_i) == label_i; an exact 0 output
// is wrong. Overall is the mean of the three.
Accuracy evaluate_accuracy(const NetworkParams& p, const std::vector<taskgen::Episode>& dataset);

// Checkpoint document: arch tag, dimensions, weights at full precision, and
// the config + seed that produced them. Round-trips bit-exactly.
struct Checkpoint {
    NetworkParams params;
    TrainConfig config;
    uint64_t seed = 0;
    std::string task;
    std::string regime;
    TrainReport report;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

} // namespace relay::recnet
