#include "relay/recnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace relay::recnet {

namespace {

// out = w * x
void matvec(const Mat& w, const double* x, double* out) {
    for (int r = 0; r < w.rows; ++r) {
        const double* wr = w.row(r);
        double acc = 0.0;
        for (int c = 0; c < w.cols; ++c) acc += wr[c] * x[c];
        out[r] = acc;
    }
}

// out += w * x
void matvec_add(const Mat& w, const double* x, double* out) {
    for (int r = 0; r < w.rows; ++r) {
        const double* wr = w.row(r);
        double acc = 0.0;
        for (int c = 0; c < w.cols; ++c) acc += wr[c] * x[c];
        out[r] += acc;
    }
}

// dx += w^T * dy
void matvec_transpose_add(const Mat& w, const double* dy, double* dx) {
    for (int r = 0; r < w.rows; ++r) {
        const double g = dy[r];
        const double* wr = w.row(r);
        for (int c = 0; c < w.cols; ++c) dx[c] += wr[c] * g;
    }
}

// g += dy (outer) x
void outer_add(Mat& g, const double* dy, const double* x) {
    for (int r = 0; r < g.rows; ++r) {
        double* gr = g.row(r);
        const double d = dy[r];
        for (int c = 0; c < g.cols; ++c) gr[c] += d * x[c];
    }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_input_dim(const NetworkParams& p, const Mat& inputs) {
    if (inputs.cols != p.input_dim)
        throw std::invalid_argument("input width " + std::to_string(inputs.cols) +
                                    " does not match network input width " +
                                    std::to_string(p.input_dim));
}

} // namespace

std::string to_string(Arch a) {
    switch (a) {
    case Arch::rnn: return "rnn";
    case Arch::gru: return "gru";
    case Arch::lstm: return "lstm";
    }
    return "?";
}

Arch arch_from_string(const std::string& s) {
    if (s == "rnn") return Arch::rnn;
    if (s == "gru") return Arch::gru;
    if (s == "lstm") return Arch::lstm;
    throw std::invalid_argument("unknown architecture: " + s);
}

NetworkParams make_params(Arch arch, int input_dim) {
    if (input_dim <= 0) throw std::invalid_argument("input_dim must be positive");
    NetworkParams p;
    p.arch = arch;
    p.input_dim = input_dim;
    const int g = p.gates();
    p.wx.assign(g, Mat(kHidden, input_dim));
    p.wh.assign(g, Mat(kHidden, kHidden));
    p.b.assign(g, std::vector<double>(kHidden, 0.0));
    p.wo = Mat(kOutputs, kHidden);
    p.bo.fill(0.0);
    return p;
}

NetworkParams zeros_like(const NetworkParams& p) { return make_params(p.arch, p.input_dim); }

NetworkParams init_params(Arch arch, int input_dim, uint64_t rng_seed) {
    NetworkParams p = make_params(arch, input_dim);
    SplitMix64 rng(rng_seed);
    auto fill = [&rng](std::span<double> t, double scale) {
        for (double& v : t) v = (2.0 * rng.u01() - 1.0) * scale;
    };
    const double rec_scale = 1.0 / std::sqrt(static_cast<double>(kHidden));
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (int g = 0; g < p.gates(); ++g) {
        fill(p.wx[g].data, in_scale);
        fill(p.wh[g].data, rec_scale);
        fill(p.b[g], rec_scale);
    }
    fill(p.wo.data, rec_scale);
    fill(std::span<double>(p.bo.data(), p.bo.size()), rec_scale);
    return p;
}

std::vector<std::span<double>> parameter_tensors(NetworkParams& p) {
    std::vector<std::span<double>> t;
    for (int g = 0; g < p.gates(); ++g) {
        t.emplace_back(p.wx[g].data);
        t.emplace_back(p.wh[g].data);
        t.emplace_back(p.b[g]);
    }
    t.emplace_back(p.wo.data);
    t.emplace_back(p.bo.data(), p.bo.size());
    return t;
}

std::vector<std::span<const double>> parameter_tensors(const NetworkParams& p) {
    std::vector<std::span<const double>> t;
    for (int g = 0; g < p.gates(); ++g) {
        t.emplace_back(p.wx[g].data);
        t.emplace_back(p.wh[g].data);
        t.emplace_back(p.b[g]);
    }
    t.emplace_back(p.wo.data);
    t.emplace_back(p.bo.data(), p.bo.size());
    return t;
}

size_t parameter_count(const NetworkParams& p) {
    size_t n = 0;
    for (auto s : parameter_tensors(p)) n += s.size();
    return n;
}

void step(const NetworkParams& p, const double* x, StepState& s) {
    double buf[4][kHidden];
    switch (p.arch) {
    case Arch::rnn: {
        double* a = buf[0];
        matvec(p.wx[0], x, a);
        matvec_add(p.wh[0], s.h.data(), a);
        for (int i = 0; i < kHidden; ++i) s.h[i] = std::tanh(a[i] + p.b[0][i]);
        break;
    }
    case Arch::gru: {
        double *az = buf[0], *ar = buf[1], *an = buf[2], *hn = buf[3];
        matvec(p.wx[0], x, az);
        matvec_add(p.wh[0], s.h.data(), az);
        matvec(p.wx[1], x, ar);
        matvec_add(p.wh[1], s.h.data(), ar);
        matvec(p.wx[2], x, an);
        matvec(p.wh[2], s.h.data(), hn);
        for (int i = 0; i < kHidden; ++i) {
            const double z = sigmoid(az[i] + p.b[0][i]);
            const double r = sigmoid(ar[i] + p.b[1][i]);
            const double n = std::tanh(an[i] + r * hn[i] + p.b[2][i]);
            s.h[i] = (1.0 - z) * n + z * s.h[i];
        }
        break;
    }
    case Arch::lstm: {
        double *ai = buf[0], *af = buf[1], *ag = buf[2], *ao = buf[3];
        matvec(p.wx[0], x, ai);
        matvec_add(p.wh[0], s.h.data(), ai);
        matvec(p.wx[1], x, af);
        matvec_add(p.wh[1], s.h.data(), af);
        matvec(p.wx[2], x, ag);
        matvec_add(p.wh[2], s.h.data(), ag);
        matvec(p.wx[3], x, ao);
        matvec_add(p.wh[3], s.h.data(), ao);
        for (int i = 0; i < kHidden; ++i) {
            const double in = sigmoid(ai[i] + p.b[0][i]);
            const double f = sigmoid(af[i] + p.b[1][i]);
            const double g = std::tanh(ag[i] + p.b[2][i]);
            const double o = sigmoid(ao[i] + p.b[3][i]);
            s.c[i] = f * s.c[i] + in * g;
            s.h[i] = o * std::tanh(s.c[i]);
        }
        break;
    }
    }
}

std::array<double, kOutputs> readout(const NetworkParams& p, const std::array<double, kHidden>& h) {
    std::array<double, kOutputs> out{};
    for (int o = 0; o < kOutputs; ++o) {
        double acc = p.bo[o];
        const double* wr = p.wo.row(o);
        for (int i = 0; i < kHidden; ++i) acc += wr[i] * h[i];
        out[o] = std::tanh(acc);
    }
    return out;
}

ForwardTrace forward(const NetworkParams& p, const Mat& inputs) {
    check_input_dim(p, inputs);
    const int steps = inputs.rows;
    ForwardTrace tr;
    tr.hidden = Mat(steps, kHidden);
    if (p.arch == Arch::lstm) tr.cell = Mat(steps, kHidden);
    StepState s;
    for (int t = 0; t < steps; ++t) {
        step(p, inputs.row(t), s);
        std::copy(s.h.begin(), s.h.end(), tr.hidden.row(t));
        if (p.arch == Arch::lstm) std::copy(s.c.begin(), s.c.end(), tr.cell.row(t));
    }
    tr.output = readout(p, s.h);
    return tr;
}

TraceTensor record_traces(const NetworkParams& p, const std::vector<taskgen::Episode>& dataset) {
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    const int steps = dataset.front().steps();
    for (const auto& ep : dataset)
        if (ep.steps() != steps)
            throw std::invalid_argument("record_traces requires episodes of equal length");

    TraceTensor tt;
    tt.n_episodes = static_cast<int>(dataset.size());
    tt.n_steps = steps;
    tt.has_cell = p.arch == Arch::lstm;
    tt.hidden.reserve(dataset.size());
    if (tt.has_cell) tt.cell.reserve(dataset.size());
    tt.outputs = Mat(tt.n_episodes, kOutputs);
    for (int e = 0; e < tt.n_episodes; ++e) {
        ForwardTrace tr = forward(p, dataset[e].inputs);
        tt.hidden.push_back(std::move(tr.hidden));
        if (tt.has_cell) tt.cell.push_back(std::move(tr.cell));
        for (int o = 0; o < kOutputs; ++o) tt.outputs(e, o) = tr.output[o];
    }
    return tt;
}

namespace {

struct BpttBuffers {
    // per time step rows; contents depend on architecture
    Mat h;       // hidden after update
    Mat s0, s1, s2, s3; // gate activations / cell quantities
};

void zero_params(NetworkParams& g) {
    for (auto t : parameter_tensors(g)) std::fill(t.begin(), t.end(), 0.0);
}

} // namespace

double bptt_gradients(const NetworkParams& p, std::span<const taskgen::Episode> batch,
                      std::span<const std::array<double, kOutputs>> targets, NetworkParams& grads) {
    if (batch.size() != targets.size())
        throw std::invalid_argument("batch and target sizes differ");
    if (batch.empty()) throw std::invalid_argument("empty batch");
    if (grads.arch != p.arch || grads.input_dim != p.input_dim)
        throw std::invalid_argument("gradient holder shape mismatch");

    zero_params(grads);
    const double inv_norm = 1.0 / (static_cast<double>(batch.size()) * kOutputs);
    double loss = 0.0;

    BpttBuffers wb;
    std::vector<double> dh(kHidden), dh_prev(kHidden), dc(kHidden), da(kHidden);

    for (size_t e = 0; e < batch.size(); ++e) {
        const Mat& x = batch[e].inputs;
        check_input_dim(p, x);
        const int steps = x.rows;

        wb.h = Mat(steps, kHidden);
        StepState st;
        Mat cell;

        switch (p.arch) {
        case Arch::rnn: {
            for (int t = 0; t < steps; ++t) {
                step(p, x.row(t), st);
                std::copy(st.h.begin(), st.h.end(), wb.h.row(t));
            }
            break;
        }
        case Arch::gru: {
            wb.s0 = Mat(steps, kHidden); // z
            wb.s1 = Mat(steps, kHidden); // r
            wb.s2 = Mat(steps, kHidden); // n
            wb.s3 = Mat(steps, kHidden); // hn = wh_n * h_prev
            for (int t = 0; t < steps; ++t) {
                double az[kHidden], ar[kHidden], an[kHidden];
                matvec(p.wx[0], x.row(t), az);
                matvec_add(p.wh[0], st.h.data(), az);
                matvec(p.wx[1], x.row(t), ar);
                matvec_add(p.wh[1], st.h.data(), ar);
                matvec(p.wx[2], x.row(t), an);
                matvec(p.wh[2], st.h.data(), wb.s3.row(t));
                for (int i = 0; i < kHidden; ++i) {
                    const double z = sigmoid(az[i] + p.b[0][i]);
                    const double r = sigmoid(ar[i] + p.b[1][i]);
                    const double n = std::tanh(an[i] + r * wb.s3(t, i) + p.b[2][i]);
                    wb.s0(t, i) = z;
                    wb.s1(t, i) = r;
                    wb.s2(t, i) = n;
                    st.h[i] = (1.0 - z) * n + z * st.h[i];
                }
                std::copy(st.h.begin(), st.h.end(), wb.h.row(t));
            }
            break;
        }
        case Arch::lstm: {
            wb.s0 = Mat(steps, kHidden); // i
            wb.s1 = Mat(steps, kHidden); // f
            wb.s2 = Mat(steps, kHidden); // g
            wb.s3 = Mat(steps, kHidden); // o
            cell = Mat(steps, kHidden);
            for (int t = 0; t < steps; ++t) {
                double ai[kHidden], af[kHidden], ag[kHidden], ao[kHidden];
                matvec(p.wx[0], x.row(t), ai);
                matvec_add(p.wh[0], st.h.data(), ai);
                matvec(p.wx[1], x.row(t), af);
                matvec_add(p.wh[1], st.h.data(), af);
                matvec(p.wx[2], x.row(t), ag);
                matvec_add(p.wh[2], st.h.data(), ag);
                matvec(p.wx[3], x.row(t), ao);
                matvec_add(p.wh[3], st.h.data(), ao);
                for (int i = 0; i < kHidden; ++i) {
                    const double in = sigmoid(ai[i] + p.b[0][i]);
                    const double f = sigmoid(af[i] + p.b[1][i]);
                    const double g = std::tanh(ag[i] + p.b[2][i]);
                    const double o = sigmoid(ao[i] + p.b[3][i]);
                    wb.s0(t, i) = in;
                    wb.s1(t, i) = f;
                    wb.s2(t, i) = g;
                    wb.s3(t, i) = o;
                    st.c[i] = f * st.c[i] + in * g;
                    st.h[i] = o * std::tanh(st.c[i]);
                    cell(t, i) = st.c[i];
                }
                std::copy(st.h.begin(), st.h.end(), wb.h.row(t));
            }
            break;
        }
        }

        // readout + loss at the final step
        const std::array<double, kOutputs> out = readout(p, st.h);
        double du[kOutputs];
        for (int o = 0; o < kOutputs; ++o) {
            const double err = out[o] - targets[e][o];
            loss += err * err * inv_norm;
            du[o] = 2.0 * err * inv_norm * (1.0 - out[o] * out[o]);
        }
        std::fill(dh.begin(), dh.end(), 0.0);
        for (int o = 0; o < kOutputs; ++o) {
            grads.bo[o] += du[o];
            const double* h_last = wb.h.row(steps - 1);
            double* gw = grads.wo.row(o);
            const double* wr = p.wo.row(o);
            for (int i = 0; i < kHidden; ++i) {
                gw[i] += du[o] * h_last[i];
                dh[i] += wr[i] * du[o];
            }
        }

        // backward through time
        std::fill(dc.begin(), dc.end(), 0.0);
        for (int t = steps - 1; t >= 0; --t) {
            const double* h_prev_row = t > 0 ? wb.h.row(t - 1) : nullptr;
            auto h_prev = [&](int i) { return h_prev_row ? h_prev_row[i] : 0.0; };
            std::fill(dh_prev.begin(), dh_prev.end(), 0.0);

            switch (p.arch) {
            case Arch::rnn: {
                for (int i = 0; i < kHidden; ++i) {
                    const double h = wb.h(t, i);
                    da[i] = dh[i] * (1.0 - h * h);
                    grads.b[0][i] += da[i];
                }
                outer_add(grads.wx[0], da.data(), x.row(t));
                if (h_prev_row) {
                    outer_add(grads.wh[0], da.data(), h_prev_row);
                    matvec_transpose_add(p.wh[0], da.data(), dh_prev.data());
                }
                break;
            }
            case Arch::gru: {
                double dan[kHidden], daz[kHidden], dar[kHidden], dhn[kHidden];
                for (int i = 0; i < kHidden; ++i) {
                    const double z = wb.s0(t, i);
                    const double r = wb.s1(t, i);
                    const double n = wb.s2(t, i);
                    const double hn = wb.s3(t, i);
                    const double dz = dh[i] * (h_prev(i) - n);
                    const double dn = dh[i] * (1.0 - z);
                    dh_prev[i] += dh[i] * z;
                    dan[i] = dn * (1.0 - n * n);
                    const double dr = dan[i] * hn;
                    dhn[i] = dan[i] * r;
                    daz[i] = dz * z * (1.0 - z);
                    dar[i] = dr * r * (1.0 - r);
                    grads.b[0][i] += daz[i];
                    grads.b[1][i] += dar[i];
                    grads.b[2][i] += dan[i];
                }
                outer_add(grads.wx[0], daz, x.row(t));
                outer_add(grads.wx[1], dar, x.row(t));
                outer_add(grads.wx[2], dan, x.row(t));
                if (h_prev_row) {
                    outer_add(grads.wh[0], daz, h_prev_row);
                    outer_add(grads.wh[1], dar, h_prev_row);
                    outer_add(grads.wh[2], dhn, h_prev_row);
                    matvec_transpose_add(p.wh[0], daz, dh_prev.data());
                    matvec_transpose_add(p.wh[1], dar, dh_prev.data());
                    matvec_transpose_add(p.wh[2], dhn, dh_prev.data());
                }
                break;
            }
            case Arch::lstm: {
                double dai[kHidden], daf[kHidden], dag[kHidden], dao[kHidden];
                for (int i = 0; i < kHidden; ++i) {
                    const double in = wb.s0(t, i);
                    const double f = wb.s1(t, i);
                    const double g = wb.s2(t, i);
                    const double o = wb.s3(t, i);
                    const double tc = std::tanh(cell(t, i));
                    const double c_prev = t > 0 ? cell(t - 1, i) : 0.0;
                    const double do_ = dh[i] * tc;
                    dc[i] += dh[i] * o * (1.0 - tc * tc);
                    const double df = dc[i] * c_prev;
                    const double di = dc[i] * g;
                    const double dg = dc[i] * in;
                    dai[i] = di * in * (1.0 - in);
                    daf[i] = df * f * (1.0 - f);
                    dag[i] = dg * (1.0 - g * g);
                    dao[i] = do_ * o * (1.0 - o);
                    dc[i] *= f; // becomes dc for t-1
                    grads.b[0][i] += dai[i];
                    grads.b[1][i] += daf[i];
                    grads.b[2][i] += dag[i];
                    grads.b[3][i] += dao[i];
                }
                outer_add(grads.wx[0], dai, x.row(t));
                outer_add(grads.wx[1], daf, x.row(t));
                outer_add(grads.wx[2], dag, x.row(t));
                outer_add(grads.wx[3], dao, x.row(t));
                if (h_prev_row) {
                    outer_add(grads.wh[0], dai, h_prev_row);
                    outer_add(grads.wh[1], daf, h_prev_row);
                    outer_add(grads.wh[2], dag, h_prev_row);
                    outer_add(grads.wh[3], dao, h_prev_row);
                    matvec_transpose_add(p.wh[0], dai, dh_prev.data());
                    matvec_transpose_add(p.wh[1], daf, dh_prev.data());
                    matvec_transpose_add(p.wh[2], dag, dh_prev.data());
                    matvec_transpose_add(p.wh[3], dao, dh_prev.data());
                }
                break;
            }
            }
            std::swap(dh, dh_prev);
        }
    }
    return loss;
}

AdamState make_adam_state(const NetworkParams& p) {
    AdamState st;
    st.m.assign(parameter_count(p), 0.0);
    st.v.assign(parameter_count(p), 0.0);
    return st;
}

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state,
               const AdamConfig& cfg) {
    auto pt = parameter_tensors(params);
    auto gt = parameter_tensors(const_cast<NetworkParams&>(grads));
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    size_t k = 0;
    for (size_t t = 0; t < pt.size(); ++t) {
        double* p = pt[t].data();
        const double* g = gt[t].data();
        for (size_t i = 0; i < pt[t].size(); ++i, ++k) {
            state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g[i];
            state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = state.m[k] / bc1;
            const double vhat = state.v[k] / bc2;
            p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

Accuracy evaluate_accuracy(const NetworkParams& p, const std::vector<taskgen::Episode>& dataset) {
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    std::array<long, 3> correct{};
    for (const auto& ep : dataset) {
        const ForwardTrace tr = forward(p, ep.inputs);
        for (int o = 0; o < kOutputs; ++o) {
            const int label = ep.labels[o];
            const bool ok = (tr.output[o] > 0.0 && label > 0) || (tr.output[o] < 0.0 && label < 0);
            if (ok) ++correct[o];
        }
    }
    Accuracy acc;
    for (int o = 0; o < kOutputs; ++o)
        acc.per_concept[o] = static_cast<double>(correct[o]) / static_cast<double>(dataset.size());
    acc.overall = (acc.per_concept[0] + acc.per_concept[1] + acc.per_concept[2]) / 3.0;
    return acc;
}

namespace {

struct TrainItem {
    taskgen::ConceptLabels labels;
    uint64_t content_seed = 0;
    int delay = 1;
};

taskgen::Episode materialize(taskgen::Task task, const TrainItem& it) {
    if (task == taskgen::Task::memory)
        return taskgen::generate_memory_episode(it.labels, it.delay, taskgen::kInjectionTimes,
                                                it.content_seed);
    return taskgen::generate_block_episode(it.labels, it.delay, it.content_seed);
}

} // namespace

TrainResult train(Arch arch, taskgen::Task task, taskgen::DelayRegime regime, uint64_t rng_seed,
                  const TrainConfig& cfg) {
    using taskgen::DelayRegime;
    if (regime.kind == DelayRegime::Kind::fixed_eval)
        throw std::invalid_argument("fixed_eval regimes are for evaluation only");
    if (cfg.train_episodes % 8 != 0 || cfg.eval_episodes % 8 != 0)
        throw std::invalid_argument("episode counts must be multiples of 8");
    if (cfg.batch_size <= 0) throw std::invalid_argument("batch_size must be positive");

    SplitMix64 master(rng_seed);
    const uint64_t item_seed = master.next();
    const uint64_t eval_seed = master.next();

    const auto eval_set = taskgen::generate_dataset(task, cfg.eval_episodes, regime, eval_seed);
    const int input_dim = eval_set.front().channels();

    // Training items keep labels + content seed; delays are resampled per
    // epoch under the uniform_random regime.
    std::vector<TrainItem> items(cfg.train_episodes);
    {
        SplitMix64 rng(item_seed);
        for (int i = 0; i < cfg.train_episodes; ++i) {
            items[i].labels = taskgen::labels_from_index(i % 8);
            items[i].content_seed = rng.next();
            items[i].delay = regime.kind == DelayRegime::Kind::uniform_random
                                 ? 1 + static_cast<int>(rng.below(5))
                                 : regime.delay;
        }
    }

    TrainReport best_report;
    double best_acc = -1.0;

    for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
        const uint64_t init_seed = master.next();
        const uint64_t epoch_seed = master.next();

        NetworkParams params = init_params(arch, input_dim, init_seed);
        NetworkParams grads = zeros_like(params);
        AdamState adam = make_adam_state(params);
        SplitMix64 rng(epoch_seed);

        TrainReport report;
        report.restarts = attempt;
        double attempt_best_acc = -1.0;

        std::vector<taskgen::Episode> epset(items.size());
        for (size_t i = 0; i < items.size(); ++i) epset[i] = materialize(task, items[i]);

        std::vector<std::array<double, kOutputs>> targets(cfg.batch_size);

        for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
            if (regime.kind == DelayRegime::Kind::uniform_random) {
                for (size_t i = 0; i < items.size(); ++i) {
                    items[i].delay = 1 + static_cast<int>(rng.below(5));
                    epset[i] = materialize(task, items[i]);
                }
            }
            for (size_t i = epset.size() - 1; i > 0; --i)
                std::swap(epset[i], epset[rng.below(i + 1)]);

            double epoch_loss = 0.0;
            int batches = 0;
            for (size_t start = 0; start < epset.size(); start += cfg.batch_size) {
                const size_t count = std::min<size_t>(cfg.batch_size, epset.size() - start);
                targets.resize(count);
                for (size_t j = 0; j < count; ++j)
                    for (int o = 0; o < kOutputs; ++o)
                        targets[j][o] = static_cast<double>(epset[start + j].labels[o]);
                const double loss =
                    bptt_gradients(params, {epset.data() + start, count}, targets, grads);
                adam_step(params, grads, adam, cfg.adam);
                epoch_loss += loss;
                ++batches;
            }
            report.loss_curve.push_back(epoch_loss / batches);

            const Accuracy acc = evaluate_accuracy(params, eval_set);
            attempt_best_acc = std::max(attempt_best_acc, acc.overall);
            if (acc.overall >= cfg.target_accuracy) {
                report.final_accuracy = acc.overall;
                report.epochs_used = epoch;
                return {std::move(params), std::move(report)};
            }
        }

        report.final_accuracy = attempt_best_acc;
        report.epochs_used = cfg.max_epochs;
        if (attempt_best_acc > best_acc) {
            best_acc = attempt_best_acc;
            best_report = std::move(report);
        }
    }

    throw TrainingFailed("training failed to reach accuracy " +
                             std::to_string(cfg.target_accuracy) + " within " +
                             std::to_string(cfg.max_restarts + 1) + " attempts",
                         best_report);
}

namespace {

using nlohmann::json;

json mat_to_json(const Mat& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Mat mat_from_json(const json& j) {
    Mat m(j.at("rows").get<int>(), j.at("cols").get<int>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != static_cast<size_t>(m.rows) * m.cols)
        throw std::runtime_error("checkpoint matrix size mismatch");
    return m;
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    json j;
    j["format"] = "relay-checkpoint-v1";
    j["arch"] = to_string(ck.params.arch);
    j["input_dim"] = ck.params.input_dim;
    j["hidden"] = kHidden;
    j["outputs"] = kOutputs;
    j["task"] = ck.task;
    j["regime"] = ck.regime;
    j["seed"] = ck.seed;
    j["config"] = {{"lr", ck.config.adam.lr},
                   {"beta1", ck.config.adam.beta1},
                   {"beta2", ck.config.adam.beta2},
                   {"eps", ck.config.adam.eps},
                   {"batch_size", ck.config.batch_size},
                   {"train_episodes", ck.config.train_episodes},
                   {"eval_episodes", ck.config.eval_episodes},
                   {"max_epochs", ck.config.max_epochs},
                   {"max_restarts", ck.config.max_restarts},
                   {"target_accuracy", ck.config.target_accuracy}};
    j["report"] = {{"final_accuracy", ck.report.final_accuracy},
                   {"epochs_used", ck.report.epochs_used},
                   {"restarts", ck.report.restarts},
                   {"loss_curve", ck.report.loss_curve}};
    json wx = json::array(), wh = json::array(), b = json::array();
    for (int g = 0; g < ck.params.gates(); ++g) {
        wx.push_back(mat_to_json(ck.params.wx[g]));
        wh.push_back(mat_to_json(ck.params.wh[g]));
        b.push_back(ck.params.b[g]);
    }
    j["weights"] = {{"wx", wx},
                    {"wh", wh},
                    {"b", b},
                    {"wo", mat_to_json(ck.params.wo)},
                    {"bo", std::vector<double>(ck.params.bo.begin(), ck.params.bo.end())}};

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << j.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    json j = json::parse(f);
    if (j.at("format").get<std::string>() != "relay-checkpoint-v1")
        throw std::runtime_error("unknown checkpoint format");

    Checkpoint ck;
    ck.params = make_params(arch_from_string(j.at("arch").get<std::string>()),
                            j.at("input_dim").get<int>());
    if (j.at("hidden").get<int>() != kHidden || j.at("outputs").get<int>() != kOutputs)
        throw std::runtime_error("checkpoint dimensions unsupported");
    ck.task = j.at("task").get<std::string>();
    ck.regime = j.at("regime").get<std::string>();
    ck.seed = j.at("seed").get<uint64_t>();

    const json& c = j.at("config");
    ck.config.adam.lr = c.at("lr").get<double>();
    ck.config.adam.beta1 = c.at("beta1").get<double>();
    ck.config.adam.beta2 = c.at("beta2").get<double>();
    ck.config.adam.eps = c.at("eps").get<double>();
    ck.config.batch_size = c.at("batch_size").get<int>();
    ck.config.train_episodes = c.at("train_episodes").get<int>();
    ck.config.eval_episodes = c.at("eval_episodes").get<int>();
    ck.config.max_epochs = c.at("max_epochs").get<int>();
    ck.config.max_restarts = c.at("max_restarts").get<int>();
    ck.config.target_accuracy = c.at("target_accuracy").get<double>();

    const json& r = j.at("report");
    ck.report.final_accuracy = r.at("final_accuracy").get<double>();
    ck.report.epochs_used = r.at("epochs_used").get<int>();
    ck.report.restarts = r.at("restarts").get<int>();
    ck.report.loss_curve = r.at("loss_curve").get<std::vector<double>>();

    const json& w = j.at("weights");
    for (int g = 0; g < ck.params.gates(); ++g) {
        ck.params.wx[g] = mat_from_json(w.at("wx").at(g));
        ck.params.wh[g] = mat_from_json(w.at("wh").at(g));
        ck.params.b[g] = w.at("b").at(g).get<std::vector<double>>();
    }
    ck.params.wo = mat_from_json(w.at("wo"));
    const auto bo = w.at("bo").get<std::vector<double>>();
    std::copy(bo.begin(), bo.end(), ck.params.bo.begin());
    return ck;
}

} // namespace relay::recnet
