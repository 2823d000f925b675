// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// pass. Trained networks are cached under acceptance_out/ so reruns skip
// finished training cells.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "relay/ablation.hpp"
#include "relay/experiment.hpp"
#include "relay/infotheory.hpp"
#include "relay/latent.hpp"
#include "relay/recnet.hpp"
#include "relay/taskgen.hpp"
#include "relay/temporal.hpp"

using namespace relay;
using recnet::Arch;
using taskgen::DelayRegime;
using taskgen::Task;

namespace {

constexpr uint64_t kBaseSeed = 1;
constexpr int kReplicates = 5;
constexpr int kAnalysisDelay = 5;
constexpr int kAnalysisEpisodes = 800;
constexpr int kEvalEpisodes = 400;
const std::string kCacheDir = "acceptance_out";

struct CellResult {
    experiment::CellKey key;
    bool trained = false;
    recnet::NetworkParams params;
    recnet::TrainReport report;
    double best_failed_accuracy = 0.0;
};

std::string cache_name(const experiment::CellKey& key) {
    std::string s = key.dir();
    std::replace(s.begin(), s.end(), '/', '_');
    return kCacheDir + "/" + s + ".json";
}

CellResult train_cell(const experiment::CellKey& key) {
    CellResult cell;
    cell.key = key;
    const uint64_t seed = experiment::cell_seed(kBaseSeed, key);
    const std::string path = cache_name(key);
    const std::string failed_path = path + ".failed";

    if (std::filesystem::exists(path)) {
        auto ck = recnet::load_checkpoint(path);
        if (ck.seed == seed) {
            cell.trained = true;
            cell.params = std::move(ck.params);
            cell.report = std::move(ck.report);
            return cell;
        }
    }
    if (std::filesystem::exists(failed_path)) {
        cell.trained = false;
        return cell;
    }

    recnet::TrainConfig cfg; // stock protocol: lr 1e-3, batch 64, 800/400, 2000 epochs, 5 restarts
    try {
        auto result = recnet::train(key.arch, key.task, key.regime, seed, cfg);
        cell.trained = true;
        cell.params = std::move(result.params);
        cell.report = std::move(result.report);
        recnet::Checkpoint ck;
        ck.params = cell.params;
        ck.config = cfg;
        ck.seed = seed;
        ck.task = taskgen::to_string(key.task);
        ck.regime = key.regime.name();
        ck.report = cell.report;
        recnet::save_checkpoint(path, ck);
    } catch (const recnet::TrainingFailed& e) {
        cell.trained = false;
        cell.best_failed_accuracy = e.best_report.final_accuracy;
        std::ofstream f(failed_path);
        f << e.best_report.final_accuracy << "\n";
    }
    return cell;
}

// analysis dataset + labels for one trained cell, seeded from the cell
struct AnalysisData {
    std::vector<taskgen::Episode> episodes;
    std::vector<taskgen::ConceptLabels> labels;
    recnet::TraceTensor trace;
    int t_star = 0;
};

AnalysisData analysis_of(const CellResult& cell) {
    AnalysisData a;
    const uint64_t seed =
        SplitMix64(experiment::cell_seed(kBaseSeed, cell.key) ^ 0xACCE55ULL).next();
    a.episodes = taskgen::generate_dataset(cell.key.task, kAnalysisEpisodes,
                                           DelayRegime::fixed_eval(kAnalysisDelay), seed);
    for (const auto& ep : a.episodes) a.labels.push_back(ep.labels);
    a.trace = recnet::record_traces(cell.params, a.episodes);
    a.t_star = a.trace.n_steps - kAnalysisDelay;
    return a;
}

struct Criterion {
    std::string name;
    bool pass = false;
    std::string detail;
};

// ---- criterion 3: estimator exactness ------------------------------------

infotheory::DiscreteTrace trace_from_rows(const std::vector<std::vector<int>>& rows) {
    infotheory::DiscreteTrace t;
    t.n_samples = static_cast<int>(rows.size());
    t.arity.assign(rows.front().size(), 2);
    for (const auto& r : rows)
        for (int v : r) t.symbols.push_back(static_cast<uint8_t>(v));
    return t;
}

Criterion criterion_estimator_exactness() {
    Criterion c{"estimator exactness on enumerated joints"};
    double worst = 0.0;

    { // closed-form entropies
        const auto fair = trace_from_rows({{0, 0}, {1, 0}});
        const int v0[] = {0};
        worst = std::max(worst, std::abs(infotheory::entropy(fair, v0) - 1.0));
        const auto skew = trace_from_rows({{1, 0}, {0, 0}, {0, 0}, {0, 0}});
        worst = std::max(worst,
                         std::abs(infotheory::entropy(skew, v0) - 0.8112781244591328));
        const auto det = trace_from_rows({{1, 0}, {1, 0}});
        worst = std::max(worst, std::abs(infotheory::entropy(det, v0)));
    }
    { // enumerated joint with exact counts: I(A;B) against direct summation
        SplitMix64 rng(2024);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::vector<int>> rows;
            double p[2][2];
            int counts[2][2];
            int total = 0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    counts[a][b] = 1 + static_cast<int>(rng.below(9));
                    total += counts[a][b];
                    for (int k = 0; k < counts[a][b]; ++k) rows.push_back({a, b});
                }
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) p[a][b] = static_cast<double>(counts[a][b]) / total;
            double direct = 0.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    const double pa = p[a][0] + p[a][1];
                    const double pb = p[0][b] + p[1][b];
                    direct += p[a][b] * std::log2(p[a][b] / (pa * pb));
                }
            const auto t = trace_from_rows(rows);
            const int va[] = {0}, vb[] = {1};
            const double mi = infotheory::conditional_mi(t, va, vb, {});
            worst = std::max(worst, std::abs(mi - direct));
        }
    }
    double xor_relay = 0.0;
    { // XOR triple co-information
        const auto t =
            trace_from_rows({{0, 0, 0, 0}, {0, 1, 1, 0}, {1, 0, 1, 0}, {1, 1, 0, 0}});
        const int yr[] = {0}, y0[] = {1};
        xor_relay = infotheory::relay_information(t, yr, y0);
    }

    c.pass = worst < 1e-9 && xor_relay == -1.0;
    c.detail = "max deviation " + format_double(worst) + ", xor co-information " +
               format_double(xor_relay);
    return c;
}

// ---- criterion 4: greedy fidelity -----------------------------------------

Criterion criterion_greedy_fidelity() {
    Criterion c{"greedy 2-node set vs exhaustive best (100 planted traces)"};
    double min_ratio = 1e18;
    int below = 0;
    for (uint64_t i = 0; i < 100; ++i) {
        SplitMix64 rng(1000 + i);
        const int n_nodes = 5, n_samples = 400;
        std::vector<int> roles(n_nodes);
        std::vector<double> probs(n_nodes);
        for (int j = 0; j < n_nodes; ++j) roles[j] = static_cast<int>(rng.next() % 4);
        for (int j = 0; j < n_nodes; ++j) probs[j] = 0.05 + 0.4 * rng.u01();
        std::vector<std::vector<int>> rows;
        for (int e = 0; e < n_samples; ++e) {
            const int x_in = rng.u01() < 0.5 ? 1 : 0;
            const int x_out = x_in ^ (rng.u01() < 0.1 ? 1 : 0);
            std::vector<int> row{x_in, x_out};
            for (int j = 0; j < n_nodes; ++j) {
                const double u = rng.u01();
                if (roles[j] == 0) row.push_back(x_in ^ (u < probs[j] ? 1 : 0));
                else if (roles[j] == 1) row.push_back(x_out ^ (u < probs[j] ? 1 : 0));
                else if (roles[j] == 2) row.push_back((x_in & x_out) ^ (u < probs[j] ? 1 : 0));
                else row.push_back(u < 0.5 ? 1 : 0);
            }
            rows.push_back(std::move(row));
        }
        const auto t = trace_from_rows(rows);
        const auto ord = infotheory::greedy_ordering(t);

        auto complement = [n_nodes](const std::vector<int>& set) {
            std::vector<int> out;
            for (int j = 0; j < n_nodes; ++j)
                if (std::find(set.begin(), set.end(), j) == set.end()) out.push_back(j);
            return out;
        };
        const std::vector<int> greedy_set{ord.removal_order[3], ord.removal_order[4]};
        const double greedy_val =
            infotheory::relay_information(t, greedy_set, complement(greedy_set));
        double best = -1e18;
        for (int a = 0; a < n_nodes; ++a)
            for (int b = a + 1; b < n_nodes; ++b) {
                const std::vector<int> set{a, b};
                best = std::max(best, infotheory::relay_information(t, set, complement(set)));
            }
        const double ratio = best <= 1e-9 ? 1.0 : greedy_val / best;
        min_ratio = std::min(min_ratio, ratio);
        if (ratio < 0.95) ++below;
    }
    c.pass = below == 0;
    c.detail = "min ratio " + format_double(min_ratio) + ", instances below 0.95: " +
               std::to_string(below);
    return c;
}

// ---- criterion 8: numerical core ------------------------------------------

Criterion criterion_numerical_core() {
    Criterion c{"gradient checks, PCA orthonormality, module invariants"};
    std::vector<std::string> failures;

    // BPTT vs central finite differences
    double max_rel = 0.0;
    for (Arch arch : {Arch::rnn, Arch::gru, Arch::lstm}) {
        for (uint64_t inst = 0; inst < 3; ++inst) {
            SplitMix64 rng(fnv1a64(recnet::to_string(arch)) + inst);
            auto p = recnet::init_params(arch, 3, rng.next());
            std::vector<taskgen::Episode> batch(2);
            for (auto& ep : batch) {
                ep.inputs = Mat(4, 3);
                for (double& v : ep.inputs.data) v = 2.0 * rng.u01() - 1.0;
            }
            std::vector<std::array<double, 3>> targets{{1.0, -1.0, 0.5}, {-1.0, 0.25, 1.0}};
            auto grads = recnet::zeros_like(p);
            recnet::bptt_gradients(p, batch, targets, grads);

            auto loss_of = [&]() {
                double loss = 0.0;
                for (size_t e = 0; e < batch.size(); ++e) {
                    const auto out = recnet::forward(p, batch[e].inputs).output;
                    for (int o = 0; o < 3; ++o)
                        loss += (out[o] - targets[e][o]) * (out[o] - targets[e][o]);
                }
                return loss / (batch.size() * 3.0);
            };
            auto pt = recnet::parameter_tensors(p);
            auto gt = recnet::parameter_tensors(grads);
            const double eps = 1e-5;
            for (size_t t = 0; t < pt.size(); ++t)
                for (size_t i = 0; i < pt[t].size(); ++i) {
                    const double saved = pt[t][i];
                    pt[t][i] = saved + eps;
                    const double up = loss_of();
                    pt[t][i] = saved - eps;
                    const double dn = loss_of();
                    pt[t][i] = saved;
                    const double numeric = (up - dn) / (2.0 * eps);
                    const double analytic = gt[t][i];
                    max_rel = std::max(
                        max_rel, std::abs(analytic - numeric) /
                                     std::max({std::abs(analytic), std::abs(numeric), 1e-4}));
                }
        }
    }
    if (max_rel >= 1e-4) failures.push_back("gradient check " + format_double(max_rel));

    // PCA orthonormality
    {
        SplitMix64 rng(88);
        for (int trial = 0; trial < 10; ++trial) {
            Mat pts(40, 7);
            for (double& v : pts.data) v = 2.0 * rng.u01() - 1.0;
            const auto p = latent::pca2(pts);
            double n0 = 0, n1 = 0, dot = 0;
            for (int r = 0; r < 7; ++r) {
                n0 += p.components(r, 0) * p.components(r, 0);
                n1 += p.components(r, 1) * p.components(r, 1);
                dot += p.components(r, 0) * p.components(r, 1);
            }
            if (std::abs(n0 - 1) > 1e-9 || std::abs(n1 - 1) > 1e-9 || std::abs(dot) > 1e-9)
                failures.push_back("pca orthonormality");
            if (p.explained_variance[0] < p.explained_variance[1] || p.explained_variance[1] < 0)
                failures.push_back("variance ordering");
        }
    }

    // module invariants, compact property sweep
    {
        SplitMix64 rng(99);
        // taskgen: balance, zero tail, sparsity, frame mass
        for (Task task : {Task::memory, Task::block}) {
            const auto ds = taskgen::generate_dataset(task, 80, DelayRegime::uniform_random(),
                                                      rng.next());
            std::array<int, 8> counts{};
            for (const auto& ep : ds) {
                ++counts[taskgen::state_index(ep.labels)];
                for (int t = ep.steps() - ep.delay; t < ep.steps(); ++t)
                    for (int ch = 0; ch < ep.channels(); ++ch)
                        if (ep.inputs(t, ch) != 0.0) failures.push_back("zero tail");
                if (task == Task::memory) {
                    int nz = 0;
                    for (double v : ep.inputs.data) nz += v != 0.0;
                    if (nz != 3) failures.push_back("memory sparsity");
                } else {
                    const int size = ep.labels.b > 0 ? 4 : 2;
                    for (int t = 0; t < taskgen::kBlockObservationSteps; ++t) {
                        int nz = 0;
                        for (int px = 0; px < 16; ++px) nz += ep.inputs(t, px) != 0.0;
                        if (nz != size) failures.push_back("frame mass");
                    }
                }
            }
            for (int k : counts)
                if (k != 10) failures.push_back("label balance");
        }
        // infotheory: entropy bounds, CMI non-negativity, chain consistency
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<std::vector<int>> rows(60, std::vector<int>(6));
            for (auto& r : rows)
                for (int& v : r) v = static_cast<int>(rng.below(2));
            const auto t = trace_from_rows(rows);
            const std::vector<int> all{0, 1, 2, 3, 4, 5};
            const double h = infotheory::entropy(t, all);
            if (h < 0.0 || h > 6.0 + 1e-12) failures.push_back("entropy bounds");
            const int a[] = {0}, b[] = {1}, cc[] = {2, 3};
            if (infotheory::conditional_mi(t, a, b, cc) < -1e-9)
                failures.push_back("cmi non-negativity");
            const auto ord = infotheory::greedy_ordering(t);
            double loss_sum = 0.0;
            for (double l : ord.per_node_loss) loss_sum += l;
            const std::vector<int> nodes{0, 1, 2, 3};
            const double full = infotheory::relay_information(t, nodes, {});
            if (std::abs(loss_sum - full) > 1e-9) failures.push_back("chain consistency");
        }
        // temporal: histogram normalization, overlap/r bounds
        for (int trial = 0; trial < 10; ++trial) {
            infotheory::RelayMatrix m0, m1;
            m0.values = Mat(3, 12);
            m1.values = Mat(3, 12);
            for (double& v : m0.values.data) v = rng.u01();
            for (double& v : m1.values.data) v = rng.u01();
            std::vector<infotheory::RelayMatrix> ms{m0, m1};
            const auto r = temporal::cross_time_correlation(ms, 0);
            if (r && (*r < -1.0 - 1e-12 || *r > 1.0 + 1e-12)) failures.push_back("r bounds");
            const auto ov = temporal::information_overlap(ms, 0);
            if (ov && (*ov < 0.0 || *ov > 1.0)) failures.push_back("overlap bounds");
            const auto usage = temporal::usage_histograms(temporal::kmeans2_binarize(m0));
            double total = 0.0;
            for (double f : usage.concepts_per_node) total += f;
            if (std::abs(total - 1.0) > 1e-12) failures.push_back("usage normalization");
        }
    }

    c.pass = failures.empty();
    c.detail = failures.empty()
                   ? "max gradient deviation " + format_double(max_rel)
                   : "failed: " + failures.front() + " (+" +
                         std::to_string(failures.size() - 1) + " more)";
    return c;
}

// ---- training-dependent criteria -------------------------------------------

using CellMap = std::map<std::string, CellResult>;

Criterion criterion_training(const CellMap& cells) {
    Criterion c{"training reproduction (memory >= 4/5, block >= 3/5 per arch)"};
    c.pass = true;
    std::string detail;
    for (Task task : {Task::memory, Task::block}) {
        for (Arch arch : {Arch::rnn, Arch::gru, Arch::lstm}) {
            int ok = 0;
            for (int rep = 0; rep < kReplicates; ++rep) {
                const experiment::CellKey key{task, arch, DelayRegime::uniform_random(), rep};
                const auto& cell = cells.at(key.dir());
                if (cell.trained && cell.report.final_accuracy >= 0.98) ++ok;
            }
            const int need = task == Task::memory ? 4 : 3;
            if (ok < need) c.pass = false;
            detail += taskgen::to_string(task) + "/" + recnet::to_string(arch) + "=" +
                      std::to_string(ok) + "/5 ";
        }
    }
    c.detail = detail;
    return c;
}

std::array<double, 10> delay_curve(const CellResult& cell) {
    std::array<double, 10> acc{};
    SplitMix64 rng(experiment::cell_seed(kBaseSeed, cell.key) ^ 0xDE1A7ULL);
    for (int d = 0; d <= 9; ++d) {
        const auto ds = taskgen::generate_dataset(cell.key.task, kEvalEpisodes,
                                                  DelayRegime::fixed_eval(d), rng.next());
        acc[d] = recnet::evaluate_accuracy(cell.params, ds).overall;
    }
    return acc;
}

Criterion criterion_delay_generalization(const CellMap& cells) {
    Criterion c{"delay generalization (random-delay robust, fixed-delay brittle)"};
    int rand_pass = 0, rand_total = 0, fixed_pass = 0, fixed_total = 0;
    bool per_arch_ok = true;
    for (Arch arch : {Arch::rnn, Arch::gru, Arch::lstm}) {
        int rand_arch = 0, fixed_arch = 0, rand_n = 0, fixed_n = 0;
        for (int rep = 0; rep < kReplicates; ++rep) {
            const experiment::CellKey rkey{Task::memory, arch, DelayRegime::uniform_random(), rep};
            const auto& rcell = cells.at(rkey.dir());
            if (rcell.trained) {
                ++rand_n;
                const auto acc = delay_curve(rcell);
                bool ok = true;
                for (int d = 1; d <= 5; ++d) ok = ok && acc[d] >= 0.90;
                if (ok) ++rand_arch;
            }
            const experiment::CellKey fkey{Task::memory, arch, DelayRegime::fixed(3), rep};
            const auto& fcell = cells.at(fkey.dir());
            if (fcell.trained) {
                ++fixed_n;
                const auto acc = delay_curve(fcell);
                bool drop = false;
                for (int d = 0; d <= 9; ++d)
                    if (d != 3 && acc[3] - acc[d] >= 0.10) drop = true;
                if (acc[3] >= 0.95 && drop) ++fixed_arch;
            }
        }
        if (rand_arch * 2 <= rand_n || fixed_arch * 2 <= fixed_n) per_arch_ok = false;
        rand_pass += rand_arch;
        rand_total += rand_n;
        fixed_pass += fixed_arch;
        fixed_total += fixed_n;
    }
    c.pass = per_arch_ok && rand_total > 0 && fixed_total > 0;
    c.detail = "random-delay robust " + std::to_string(rand_pass) + "/" +
               std::to_string(rand_total) + ", fixed-delay brittle " +
               std::to_string(fixed_pass) + "/" + std::to_string(fixed_total);
    return c;
}

Criterion criterion_knockout_selectivity(const CellMap& cells) {
    Criterion c{"knockout selectivity, chance floor, and no-op identity"};
    bool chance_ok = true, noop_ok = true;
    std::string detail;
    bool majority_ok = true;

    for (Arch arch : {Arch::rnn, Arch::gru, Arch::lstm}) {
        // selective[k] = replicates where concept k's own-top-3 knockout hurt
        // it at least 0.05 more than each other concept
        std::array<int, 3> selective{};
        int trained = 0;
        for (int rep = 0; rep < kReplicates; ++rep) {
            const experiment::CellKey key{Task::memory, arch, DelayRegime::uniform_random(), rep};
            const auto& cell = cells.at(key.dir());
            if (!cell.trained) continue;
            ++trained;
            const AnalysisData a = analysis_of(cell);

            std::array<infotheory::NodeOrdering, 3> orderings;
            infotheory::relay_matrix(a.trace, a.labels, a.t_star, orderings);

            // knockouts are scored on the training-regime delay mix, where
            // the answer may come due 1..5 steps after the knockout
            const auto knockout_set = taskgen::generate_dataset(
                Task::memory, kAnalysisEpisodes, DelayRegime::uniform_random(),
                SplitMix64(experiment::cell_seed(kBaseSeed, key) ^ 0xF16F4ULL).next());
            const auto unablated = recnet::evaluate_accuracy(cell.params, knockout_set);

            // no-op identity, bit-exact on every episode
            for (const auto& ep : knockout_set) {
                const auto plain = recnet::forward(cell.params, ep.inputs).output;
                const auto ko = ablation::forward_with_knockout(cell.params, ep, {}, a.t_star);
                if (plain != ko) noop_ok = false;
            }

            // full knockout: overall accuracy 0.5 +- 0.05
            std::vector<int> all_nodes(recnet::kHidden);
            for (int i = 0; i < recnet::kHidden; ++i) all_nodes[i] = i;
            const auto full = ablation::evaluate_with_knockout(cell.params, knockout_set,
                                                               all_nodes, a.t_star);
            if (std::abs(full.overall - 0.5) > 0.05) chance_ok = false;

            for (int concept_idx = 0; concept_idx < 3; ++concept_idx) {
                const auto& order = orderings[concept_idx].removal_order;
                const std::vector<int> top3(order.end() - 3, order.end());
                const auto ko = ablation::evaluate_with_knockout(cell.params, knockout_set,
                                                                 top3, a.t_star);
                const double own_drop =
                    unablated.per_concept[concept_idx] - ko.per_concept[concept_idx];
                bool sel = true;
                for (int other = 0; other < 3; ++other) {
                    if (other == concept_idx) continue;
                    const double other_drop =
                        unablated.per_concept[other] - ko.per_concept[other];
                    // "at least 0.05 more", robust to rounding of exact 1/20
                    if (own_drop < other_drop + 0.05 - 1e-12) sel = false;
                }
                if (sel) ++selective[concept_idx];
            }
        }
        detail += recnet::to_string(arch) + "=";
        for (int k = 0; k < 3; ++k) {
            if (selective[k] * 2 <= trained) majority_ok = false;
            detail += std::to_string(selective[k]) + (k < 2 ? "/" : "");
        }
        detail += " of " + std::to_string(trained) + "  ";
    }
    c.pass = majority_ok && chance_ok && noop_ok;
    c.detail = detail + (chance_ok ? "chance-floor ok" : "chance-floor FAIL") +
               (noop_ok ? ", no-op ok" : ", no-op FAIL");
    return c;
}

Criterion criterion_temporal_localization(const CellMap& cells) {
    Criterion c{"temporal localization and RNN vs gated stability"};

    // LSTM locality: rows quiet before injection, loud after
    int local_pass = 0, local_total = 0;
    for (int rep = 0; rep < kReplicates; ++rep) {
        const experiment::CellKey key{Task::memory, Arch::lstm, DelayRegime::uniform_random(), rep};
        const auto& cell = cells.at(key.dir());
        if (!cell.trained) continue;
        ++local_total;
        const AnalysisData a = analysis_of(cell);
        const auto matrices = temporal::relay_over_time(a.trace, a.labels);
        bool ok = true;
        for (int concept_idx = 0; concept_idx < 3; ++concept_idx) {
            const int inj_row = taskgen::kInjectionTimes[concept_idx] - 1;
            for (int t = 0; t < a.trace.n_steps; ++t) {
                double sum = 0.0;
                for (int j = 0; j < recnet::kHidden; ++j) sum += matrices[t].values(concept_idx, j);
                if (t < inj_row && sum / recnet::kHidden >= 0.05) ok = false;
                if (t >= inj_row && sum <= 0.3) ok = false;
            }
        }
        if (ok) ++local_pass;
    }

    // fixed-delay r/overlap: RNN below both gated architectures
    std::map<Arch, std::pair<double, double>> mean_ro;
    std::map<Arch, int> n_ro;
    for (Arch arch : {Arch::rnn, Arch::gru, Arch::lstm}) {
        for (int rep = 0; rep < kReplicates; ++rep) {
            const experiment::CellKey key{Task::memory, arch, DelayRegime::fixed(3), rep};
            const auto& cell = cells.at(key.dir());
            if (!cell.trained) continue;
            const AnalysisData a = analysis_of(cell);
            const auto matrices = temporal::relay_over_time(a.trace, a.labels);
            const auto r = temporal::cross_time_correlation(matrices, a.t_star);
            const auto ov = temporal::information_overlap(matrices, a.t_star);
            if (r && ov) {
                mean_ro[arch].first += *r;
                mean_ro[arch].second += *ov;
                ++n_ro[arch];
            }
        }
        if (n_ro[arch] > 0) {
            mean_ro[arch].first /= n_ro[arch];
            mean_ro[arch].second /= n_ro[arch];
        }
    }
    const bool contrast_ok =
        n_ro[Arch::rnn] > 0 && n_ro[Arch::gru] > 0 && n_ro[Arch::lstm] > 0 &&
        mean_ro[Arch::rnn].first < mean_ro[Arch::gru].first &&
        mean_ro[Arch::rnn].first < mean_ro[Arch::lstm].first &&
        mean_ro[Arch::rnn].second < mean_ro[Arch::gru].second &&
        mean_ro[Arch::rnn].second < mean_ro[Arch::lstm].second;

    c.pass = local_pass * 2 > local_total && local_total > 0 && contrast_ok;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "locality %d/%d, r(rnn/gru/lstm)=%.3f/%.3f/%.3f, "
                  "overlap=%.3f/%.3f/%.3f",
                  local_pass, local_total, mean_ro[Arch::rnn].first, mean_ro[Arch::gru].first,
                  mean_ro[Arch::lstm].first, mean_ro[Arch::rnn].second,
                  mean_ro[Arch::gru].second, mean_ro[Arch::lstm].second);
    c.detail = buf;
    return c;
}

Criterion criterion_pca_validation(const CellMap& cells) {
    Criterion c{"PCA separation vs shuffled labels; targeted vs random removal"};

    // part 1: first trained memory RNN, 8-state silhouette vs shuffled labels
    double sil8 = 0.0, shuffled_mean = 0.0;
    bool part1 = false;
    for (int rep = 0; rep < kReplicates && !part1; ++rep) {
        const experiment::CellKey key{Task::memory, Arch::rnn, DelayRegime::uniform_random(), rep};
        const auto& cell = cells.at(key.dir());
        if (!cell.trained) continue;
        const AnalysisData a = analysis_of(cell);
        Mat states(a.trace.n_episodes, recnet::kHidden);
        for (int e = 0; e < a.trace.n_episodes; ++e)
            for (int j = 0; j < recnet::kHidden; ++j)
                states(e, j) = a.trace.hidden[e](a.t_star, j);
        const auto pca = latent::pca2(states);
        std::vector<int> labels8(a.trace.n_episodes);
        for (int e = 0; e < a.trace.n_episodes; ++e)
            labels8[e] = taskgen::state_index(a.labels[e]);
        sil8 = latent::cluster_scores(pca.projected, labels8).silhouette;

        SplitMix64 rng(4321);
        std::vector<int> shuffled = labels8;
        for (int perm = 0; perm < 100; ++perm) {
            for (size_t i = shuffled.size() - 1; i > 0; --i)
                std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
            shuffled_mean += latent::cluster_scores(pca.projected, shuffled).silhouette;
        }
        shuffled_mean /= 100.0;
        part1 = sil8 >= shuffled_mean + 0.2;
        break; // the criterion names a single trained RNN
    }

    // part 2: targeted removal at least matches the random baseline
    int curve_pass = 0, curve_total = 0;
    for (int rep = 0; rep < kReplicates; ++rep) {
        const experiment::CellKey key{Task::memory, Arch::rnn, DelayRegime::uniform_random(), rep};
        const auto& cell = cells.at(key.dir());
        if (!cell.trained) continue;
        ++curve_total;
        const AnalysisData a = analysis_of(cell);
        Mat states(a.trace.n_episodes, recnet::kHidden);
        for (int e = 0; e < a.trace.n_episodes; ++e)
            for (int j = 0; j < recnet::kHidden; ++j)
                states(e, j) = a.trace.hidden[e](a.t_star, j);
        std::array<infotheory::NodeOrdering, 3> orderings;
        infotheory::relay_matrix(a.trace, a.labels, a.t_star, orderings);

        std::array<double, 11> targeted_mean{}, random_mean{};
        for (int concept_idx = 0; concept_idx < 3; ++concept_idx) {
            const auto targeted = latent::removal_curve(states, a.labels, orderings[concept_idx],
                                                        concept_idx);
            const auto baseline = latent::random_removal_baseline(
                states, a.labels, concept_idx, 50,
                experiment::cell_seed(kBaseSeed, key) ^ (0xBA5E + concept_idx));
            for (int m = 0; m <= 10; ++m) {
                targeted_mean[m] += targeted.scores[m].silhouette / 3.0;
                random_mean[m] += baseline.scores[m].silhouette / 3.0;
            }
        }
        bool ok = true;
        for (int m = 4; m <= 10; ++m)
            if (targeted_mean[m] < random_mean[m]) ok = false;
        if (ok) ++curve_pass;
    }

    c.pass = part1 && curve_pass * 2 > curve_total && curve_total > 0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "silhouette %.3f vs shuffled %.3f, removal trend %d/%d",
                  sil8, shuffled_mean, curve_pass, curve_total);
    c.detail = buf;
    return c;
}

} // namespace

int main() {
    std::filesystem::create_directories(kCacheDir);

    std::vector<experiment::CellKey> keys;
    for (Arch arch : {Arch::rnn, Arch::gru, Arch::lstm}) {
        for (int rep = 0; rep < kReplicates; ++rep) {
            keys.push_back({Task::memory, arch, DelayRegime::uniform_random(), rep});
            keys.push_back({Task::block, arch, DelayRegime::uniform_random(), rep});
            keys.push_back({Task::memory, arch, DelayRegime::fixed(3), rep});
        }
    }

    CellMap cells;
    {
        std::mutex mu;
        std::atomic<size_t> next{0};
        const int workers =
            std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                            static_cast<unsigned>(keys.size())));
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (;;) {
                    const size_t i = next.fetch_add(1);
                    if (i >= keys.size()) return;
                    CellResult cell = train_cell(keys[i]);
                    std::lock_guard<std::mutex> lock(mu);
                    const std::string tag = cell.trained ? "trained" : "FAILED";
                    std::printf("[train %zu/%zu] %s %s acc=%.4f\n", i + 1, keys.size(),
                                keys[i].dir().c_str(), tag.c_str(),
                                cell.trained ? cell.report.final_accuracy
                                             : cell.best_failed_accuracy);
                    std::fflush(stdout);
                    cells[keys[i].dir()] = std::move(cell);
                }
            });
        for (auto& t : pool) t.join();
    }

    std::vector<Criterion> results;
    results.push_back(criterion_training(cells));             // 1
    results.push_back(criterion_delay_generalization(cells)); // 2
    results.push_back(criterion_estimator_exactness());       // 3
    results.push_back(criterion_greedy_fidelity());           // 4
    results.push_back(criterion_knockout_selectivity(cells)); // 5
    results.push_back(criterion_temporal_localization(cells));// 6
    results.push_back(criterion_pca_validation(cells));       // 7
    results.push_back(criterion_numerical_core());            // 8

    bool all_pass = true;
    for (size_t i = 0; i < results.size(); ++i) {
        std::printf("criterion %zu: %s — %s (%s)\n", i + 1,
                    results[i].pass ? "PASS" : "FAIL", results[i].name.c_str(),
                    results[i].detail.c_str());
        all_pass = all_pass && results[i].pass;
    }
    std::printf("%s\n", all_pass ? "ALL CRITERIA PASS" : "SOME CRITERIA FAILED");
    return all_pass ? 0 : 1;
}
