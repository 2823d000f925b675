#include "relay/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "relay/ablation.hpp"
#include "relay/infotheory.hpp"
#include "relay/latent.hpp"
#include "relay/temporal.hpp"

namespace relay::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    json j = json::parse(f);

    ExperimentConfig cfg;
    if (j.contains("tasks")) {
        cfg.tasks.clear();
        for (const auto& t : j["tasks"]) cfg.tasks.push_back(taskgen::task_from_string(t));
    }
    if (j.contains("archs")) {
        cfg.archs.clear();
        for (const auto& a : j["archs"]) cfg.archs.push_back(recnet::arch_from_string(a));
    }
    if (j.contains("regimes")) {
        cfg.regimes.clear();
        for (const auto& r : j["regimes"])
            cfg.regimes.push_back(taskgen::DelayRegime::from_name(r));
    }
    if (j.contains("replicates")) cfg.replicates = j["replicates"].get<int>();
    if (j.contains("base_seed")) cfg.base_seed = j["base_seed"].get<uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    if (j.contains("eval_episodes")) cfg.eval_episodes = j["eval_episodes"].get<int>();
    if (j.contains("analysis_episodes")) cfg.analysis_episodes = j["analysis_episodes"].get<int>();
    if (j.contains("analysis_delay")) cfg.analysis_delay = j["analysis_delay"].get<int>();
    if (j.contains("knockout_baseline_samples"))
        cfg.knockout_baseline_samples = j["knockout_baseline_samples"].get<int>();
    if (j.contains("removal_baseline_samples"))
        cfg.removal_baseline_samples = j["removal_baseline_samples"].get<int>();
    if (j.contains("train")) {
        const json& t = j["train"];
        if (t.contains("lr")) cfg.train.adam.lr = t["lr"].get<double>();
        if (t.contains("beta1")) cfg.train.adam.beta1 = t["beta1"].get<double>();
        if (t.contains("beta2")) cfg.train.adam.beta2 = t["beta2"].get<double>();
        if (t.contains("eps")) cfg.train.adam.eps = t["eps"].get<double>();
        if (t.contains("batch_size")) cfg.train.batch_size = t["batch_size"].get<int>();
        if (t.contains("train_episodes")) cfg.train.train_episodes = t["train_episodes"].get<int>();
        if (t.contains("eval_episodes")) cfg.train.eval_episodes = t["eval_episodes"].get<int>();
        if (t.contains("max_epochs")) cfg.train.max_epochs = t["max_epochs"].get<int>();
        if (t.contains("max_restarts")) cfg.train.max_restarts = t["max_restarts"].get<int>();
        if (t.contains("target_accuracy"))
            cfg.train.target_accuracy = t["target_accuracy"].get<double>();
    }
    return cfg;
}

std::string CellKey::dir() const {
    return taskgen::to_string(task) + "/" + recnet::to_string(arch) + "/" + regime.name() +
           "/rep" + std::to_string(replicate);
}

uint64_t cell_seed(uint64_t base_seed, const CellKey& key) {
    SplitMix64 rng(base_seed ^ fnv1a64(key.dir()));
    return rng.next();
}

namespace {

ManifestFile checked(const std::string& root, const std::string& rel) {
    return {rel, file_checksum(root + "/" + rel)};
}

void write_delay_accuracy_csv(const std::string& path, const recnet::NetworkParams& params,
                              taskgen::Task task, int episodes, SplitMix64& rng) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "delay,overall,acc_a,acc_b,acc_c\n";
    for (int d = 0; d <= 9; ++d) {
        const auto ds =
            taskgen::generate_dataset(task, episodes, taskgen::DelayRegime::fixed_eval(d), rng.next());
        const auto acc = recnet::evaluate_accuracy(params, ds);
        f << d << ',' << format_double(acc.overall) << ',' << format_double(acc.per_concept[0])
          << ',' << format_double(acc.per_concept[1]) << ','
          << format_double(acc.per_concept[2]) << '\n';
    }
}

void write_temporal_summary_csv(const std::string& path, const CellKey& key,
                                std::optional<double> r, std::optional<double> overlap) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "arch,task,regime,replicate,r,overlap\n";
    f << recnet::to_string(key.arch) << ',' << taskgen::to_string(key.task) << ','
      << key.regime.name() << ',' << key.replicate << ','
      << (r ? format_double(*r) : "nan") << ','
      << (overlap ? format_double(*overlap) : "nan") << '\n';
}

void write_usage_csv(const std::string& path, const temporal::UsageHistograms& usage) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "kind,bin,fraction\n";
    for (size_t i = 0; i < usage.concepts_per_node.size(); ++i)
        f << "concepts_per_node," << i << ',' << format_double(usage.concepts_per_node[i]) << '\n';
    for (size_t i = 0; i < usage.nodes_per_concept.size(); ++i)
        f << "nodes_per_concept," << i << ',' << format_double(usage.nodes_per_concept[i]) << '\n';
}

} // namespace

std::vector<ManifestFile> analyze_network(const recnet::NetworkParams& params, taskgen::Task task,
                                          const CellKey& key, uint64_t seed,
                                          const ExperimentConfig& cfg, const std::string& dir) {
    if (cfg.analysis_delay < 1 || cfg.analysis_delay > 9)
        throw std::invalid_argument("analysis_delay must be in [1,9]");
    fs::create_directories(dir);
    std::vector<ManifestFile> files;

    SplitMix64 rng(SplitMix64(seed ^ 0x616E616C797A65ULL).next()); // analysis stream

    write_delay_accuracy_csv(dir + "/delay_accuracy.csv", params, task, cfg.eval_episodes, rng);
    files.push_back(checked(dir, "delay_accuracy.csv"));

    const auto analysis_set = taskgen::generate_dataset(
        task, cfg.analysis_episodes, taskgen::DelayRegime::fixed_eval(cfg.analysis_delay),
        rng.next());
    const auto trace = recnet::record_traces(params, analysis_set);
    std::vector<taskgen::ConceptLabels> labels;
    labels.reserve(analysis_set.size());
    for (const auto& ep : analysis_set) labels.push_back(ep.labels);

    // first step after the last content input
    const int t_star = trace.n_steps - cfg.analysis_delay;

    std::array<infotheory::NodeOrdering, 3> orderings;
    const auto rmatrix = infotheory::relay_matrix(trace, labels, t_star, orderings);
    infotheory::write_relay_matrix_csv(dir + "/relay_matrix.csv", rmatrix);
    files.push_back(checked(dir, "relay_matrix.csv"));
    for (int c = 0; c < 3; ++c) {
        const std::string name = "ordering_" + std::to_string(c) + ".csv";
        infotheory::write_ordering_csv(dir + "/" + name, orderings[c]);
        files.push_back(checked(dir, name));
    }

    // knockouts are scored on training-regime delays, where the answer may
    // come due at any point from 1 to 5 steps after the knockout
    const auto knockout_set = taskgen::generate_dataset(
        task, cfg.analysis_episodes, taskgen::DelayRegime::uniform_random(), rng.next());
    const auto sweep = ablation::knockout_sweep(params, knockout_set, orderings, t_star);
    std::vector<double> baseline(recnet::kHidden + 1);
    for (int k = 0; k <= recnet::kHidden; ++k) {
        const auto mean = ablation::random_knockout_baseline(
            params, knockout_set, k, cfg.knockout_baseline_samples, t_star, rng.next());
        baseline[k] = (mean[0] + mean[1] + mean[2]) / 3.0;
    }
    ablation::write_knockout_csv(dir + "/knockout.csv", sweep, baseline);
    files.push_back(checked(dir, "knockout.csv"));

    const auto matrices = temporal::relay_over_time(trace, labels);
    temporal::write_relay_over_time_csv(dir + "/relay_over_time.csv", matrices);
    files.push_back(checked(dir, "relay_over_time.csv"));
    const auto r = temporal::cross_time_correlation(matrices, t_star);
    const auto overlap = temporal::information_overlap(matrices, t_star);
    write_temporal_summary_csv(dir + "/temporal_summary.csv", key, r, overlap);
    files.push_back(checked(dir, "temporal_summary.csv"));

    write_usage_csv(dir + "/usage.csv", temporal::usage_histograms(
                                            temporal::kmeans2_binarize(matrices[t_star])));
    files.push_back(checked(dir, "usage.csv"));

    Mat states(trace.n_episodes, recnet::kHidden);
    for (int e = 0; e < trace.n_episodes; ++e)
        for (int j = 0; j < recnet::kHidden; ++j) states(e, j) = trace.hidden[e](t_star, j);

    std::array<latent::RemovalCurve, 3> targeted, random_baseline;
    for (int c = 0; c < 3; ++c) {
        targeted[c] = latent::removal_curve(states, labels, orderings[c], c);
        random_baseline[c] = latent::random_removal_baseline(states, labels, c,
                                                             cfg.removal_baseline_samples,
                                                             rng.next());
    }
    latent::write_removal_curves_csv(dir + "/removal_curves.csv", targeted, random_baseline);
    files.push_back(checked(dir, "removal_curves.csv"));

    latent::write_pca_points_csv(dir + "/pca_points.csv", latent::pca2(states), labels);
    files.push_back(checked(dir, "pca_points.csv"));

    return files;
}

namespace {

json manifest_to_json(const Manifest& m) {
    json cells = json::array();
    for (const auto& c : m.cells) {
        json files = json::array();
        for (const auto& f : c.files)
            files.push_back({{"path", f.path}, {"fnv1a64", f.checksum}});
        cells.push_back({{"task", taskgen::to_string(c.key.task)},
                         {"arch", recnet::to_string(c.key.arch)},
                         {"regime", c.key.regime.name()},
                         {"replicate", c.key.replicate},
                         {"seed", c.seed},
                         {"status", c.status},
                         {"final_accuracy", c.final_accuracy},
                         {"epochs_used", c.epochs_used},
                         {"restarts", c.restarts},
                         {"files", files}});
    }
    return json{{"format", "relay-manifest-v1"},
                {"base_seed", m.base_seed},
                {"output_dir", m.output_dir},
                {"cells", cells}};
}

} // namespace

void save_manifest(const std::string& path, const Manifest& m) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << manifest_to_json(m).dump(1) << '\n';
}

Manifest load_manifest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open manifest: " + path);
    json j = json::parse(f);
    if (j.at("format").get<std::string>() != "relay-manifest-v1")
        throw std::runtime_error("unknown manifest format");
    Manifest m;
    m.base_seed = j.at("base_seed").get<uint64_t>();
    m.output_dir = j.at("output_dir").get<std::string>();
    for (const auto& c : j.at("cells")) {
        CellRecord rec;
        rec.key.task = taskgen::task_from_string(c.at("task").get<std::string>());
        rec.key.arch = recnet::arch_from_string(c.at("arch").get<std::string>());
        rec.key.regime = taskgen::DelayRegime::from_name(c.at("regime").get<std::string>());
        rec.key.replicate = c.at("replicate").get<int>();
        rec.seed = c.at("seed").get<uint64_t>();
        rec.status = c.at("status").get<std::string>();
        rec.final_accuracy = c.at("final_accuracy").get<double>();
        rec.epochs_used = c.at("epochs_used").get<int>();
        rec.restarts = c.at("restarts").get<int>();
        for (const auto& fj : c.at("files"))
            rec.files.push_back(
                {fj.at("path").get<std::string>(), fj.at("fnv1a64").get<uint64_t>()});
        m.cells.push_back(std::move(rec));
    }
    return m;
}

bool all_cells_ok(const Manifest& m) {
    return std::all_of(m.cells.begin(), m.cells.end(),
                       [](const CellRecord& c) { return c.status == "ok"; });
}

namespace {

bool cell_complete(const Manifest& old, const CellKey& key, const std::string& root,
                   CellRecord& out) {
    for (const auto& c : old.cells) {
        if (c.key.dir() != key.dir() || c.status != "ok") continue;
        for (const auto& f : c.files) {
            const std::string full = root + "/" + f.path;
            std::error_code ec;
            if (!fs::exists(full, ec)) return false;
            if (file_checksum(full) != f.checksum) return false;
        }
        out = c;
        return true;
    }
    return false;
}

CellRecord run_cell(const ExperimentConfig& cfg, const CellKey& key) {
    CellRecord rec;
    rec.key = key;
    rec.seed = cell_seed(cfg.base_seed, key);
    const std::string dir = cfg.output_dir + "/" + key.dir();
    fs::create_directories(dir);

    recnet::TrainReport report;
    recnet::NetworkParams params;
    try {
        auto result = recnet::train(key.arch, key.task, key.regime, rec.seed, cfg.train);
        params = std::move(result.params);
        report = std::move(result.report);
    } catch (const recnet::TrainingFailed& e) {
        rec.status = "failed";
        rec.final_accuracy = e.best_report.final_accuracy;
        rec.epochs_used = e.best_report.epochs_used;
        rec.restarts = e.best_report.restarts;
        return rec;
    }

    recnet::Checkpoint ck;
    ck.params = params;
    ck.config = cfg.train;
    ck.seed = rec.seed;
    ck.task = taskgen::to_string(key.task);
    ck.regime = key.regime.name();
    ck.report = report;
    recnet::save_checkpoint(dir + "/checkpoint.json", ck);
    rec.files.push_back(checked(dir, "checkpoint.json"));

    auto analysis_files = analyze_network(params, key.task, key, rec.seed, cfg, dir);
    for (auto& f : analysis_files) rec.files.push_back(std::move(f));

    // stored relative to the output dir
    for (auto& f : rec.files) f.path = key.dir() + "/" + f.path;

    rec.status = "ok";
    rec.final_accuracy = report.final_accuracy;
    rec.epochs_used = report.epochs_used;
    rec.restarts = report.restarts;
    return rec;
}

} // namespace

Manifest run_experiment(const ExperimentConfig& cfg) {
    if (cfg.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    fs::create_directories(cfg.output_dir);

    const std::string manifest_path = cfg.output_dir + "/manifest.json";
    Manifest old;
    if (fs::exists(manifest_path)) old = load_manifest(manifest_path);

    std::vector<CellKey> keys;
    for (auto task : cfg.tasks)
        for (auto arch : cfg.archs)
            for (const auto& regime : cfg.regimes)
                for (int rep = 0; rep < cfg.replicates; ++rep)
                    keys.push_back({task, arch, regime, rep});

    Manifest manifest;
    manifest.base_seed = cfg.base_seed;
    manifest.output_dir = cfg.output_dir;
    manifest.cells.resize(keys.size());

    std::mutex mu;
    std::atomic<size_t> next{0};
    int workers = cfg.workers > 0 ? cfg.workers
                                  : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, static_cast<int>(keys.size())));

    auto work = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= keys.size()) return;
            CellRecord rec;
            if (!cell_complete(old, keys[i], cfg.output_dir, rec)) rec = run_cell(cfg, keys[i]);
            std::lock_guard<std::mutex> lock(mu);
            manifest.cells[i] = std::move(rec);
            // partial manifests only contain finished cells
            Manifest snapshot;
            snapshot.base_seed = manifest.base_seed;
            snapshot.output_dir = manifest.output_dir;
            for (const auto& c : manifest.cells)
                if (!c.status.empty()) snapshot.cells.push_back(c);
            save_manifest(manifest_path, snapshot);
        }
    };

    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();

    save_manifest(manifest_path, manifest);
    return manifest;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open csv: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    return rows;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    int n = 0;
};

MeanSe mean_se(const std::vector<double>& xs) {
    MeanSe r;
    r.n = static_cast<int>(xs.size());
    if (r.n == 0) return r;
    for (double x : xs) r.mean += x;
    r.mean /= r.n;
    if (r.n < 2) return r; // single replicate: SE is 0
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / (r.n - 1)) / std::sqrt(static_cast<double>(r.n));
    return r;
}

std::string group_of(const CellKey& key) {
    return taskgen::to_string(key.task) + "," + recnet::to_string(key.arch) + "," +
           key.regime.name();
}

} // namespace

void summarize(const Manifest& m, const std::string& out_dir) {
    if (m.cells.empty()) throw std::invalid_argument("empty manifest");
    fs::create_directories(out_dir);

    // group -> delay -> overall accuracies; group -> r / overlap values;
    // group -> usage kind/bin -> fractions
    std::map<std::string, std::map<int, std::vector<double>>> delay_acc;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> temporal_vals;
    std::map<std::string, std::map<std::pair<std::string, int>, std::vector<double>>> usage_vals;

    for (const auto& cell : m.cells) {
        if (cell.status != "ok") continue;
        const std::string group = group_of(cell.key);
        const std::string dir = m.output_dir + "/" + cell.key.dir();

        auto rows = read_csv(dir + "/delay_accuracy.csv");
        for (size_t i = 1; i < rows.size(); ++i)
            delay_acc[group][std::stoi(rows[i][0])].push_back(std::stod(rows[i][1]));

        rows = read_csv(dir + "/temporal_summary.csv");
        if (rows.size() > 1) {
            const double r = std::stod(rows[1][4]);
            const double overlap = std::stod(rows[1][5]);
            if (std::isfinite(r)) temporal_vals[group].first.push_back(r);
            if (std::isfinite(overlap)) temporal_vals[group].second.push_back(overlap);
        }

        rows = read_csv(dir + "/usage.csv");
        for (size_t i = 1; i < rows.size(); ++i)
            usage_vals[group][{rows[i][0], std::stoi(rows[i][1])}].push_back(
                std::stod(rows[i][2]));
    }

    {
        std::ofstream f(out_dir + "/delay_accuracy_summary.csv", std::ios::binary);
        f << "task,arch,regime,delay,mean_overall,se_overall,replicates\n";
        for (const auto& [group, per_delay] : delay_acc)
            for (const auto& [delay, xs] : per_delay) {
                const MeanSe s = mean_se(xs);
                f << group << ',' << delay << ',' << format_double(s.mean) << ','
                  << format_double(s.se) << ',' << s.n << '\n';
            }
    }
    {
        std::ofstream f(out_dir + "/temporal_summary.csv", std::ios::binary);
        f << "task,arch,regime,mean_r,se_r,mean_overlap,se_overlap,replicates\n";
        for (const auto& [group, vals] : temporal_vals) {
            const MeanSe r = mean_se(vals.first);
            const MeanSe ov = mean_se(vals.second);
            f << group << ',' << format_double(r.mean) << ',' << format_double(r.se) << ','
              << format_double(ov.mean) << ',' << format_double(ov.se) << ',' << r.n << '\n';
        }
    }
    {
        std::ofstream f(out_dir + "/usage_summary.csv", std::ios::binary);
        f << "task,arch,regime,kind,bin,mean_fraction,replicates\n";
        for (const auto& [group, bins] : usage_vals)
            for (const auto& [kind_bin, xs] : bins) {
                const MeanSe s = mean_se(xs);
                f << group << ',' << kind_bin.first << ',' << kind_bin.second << ','
                  << format_double(s.mean) << ',' << s.n << '\n';
            }
    }
}

} // namespace relay::experiment
