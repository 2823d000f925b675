#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relay/experiment.hpp"
#include "relay/recnet.hpp"
#include "relay/taskgen.hpp"

namespace {

using namespace relay;

struct TrainFlags {
    std::string task = "memory";
    std::string arch = "lstm";
    std::string regime = "rand15";
    uint64_t seed = 1;
    recnet::TrainConfig cfg;

    void attach(CLI::App* cmd) {
        cmd->add_option("--task", task, "memory or block");
        cmd->add_option("--arch", arch, "rnn, gru, or lstm");
        cmd->add_option("--regime", regime, "fixed1..fixed5 or rand15");
        cmd->add_option("--seed", seed, "training seed");
        cmd->add_option("--lr", cfg.adam.lr, "Adam learning rate");
        cmd->add_option("--batch-size", cfg.batch_size, "minibatch size");
        cmd->add_option("--train-episodes", cfg.train_episodes, "training set size");
        cmd->add_option("--eval-episodes", cfg.eval_episodes, "held-out set size");
        cmd->add_option("--max-epochs", cfg.max_epochs, "epoch cap per attempt");
        cmd->add_option("--max-restarts", cfg.max_restarts, "extra attempts after the cap");
        cmd->add_option("--target-accuracy", cfg.target_accuracy, "early-stop accuracy");
    }
};

int cmd_gen(const std::string& task, int episodes, const std::string& regime, uint64_t seed,
            const std::string& out) {
    const auto ds = taskgen::generate_dataset(taskgen::task_from_string(task), episodes,
                                              taskgen::DelayRegime::from_name(regime), seed);
    taskgen::write_dataset_csv(out, ds);
    std::cout << "wrote " << ds.size() << " episodes to " << out << "\n";
    return 0;
}

int cmd_train(const TrainFlags& flags, const std::string& out) {
    const auto task = taskgen::task_from_string(flags.task);
    const auto arch = recnet::arch_from_string(flags.arch);
    const auto regime = taskgen::DelayRegime::from_name(flags.regime);
    try {
        auto result = recnet::train(arch, task, regime, flags.seed, flags.cfg);
        recnet::Checkpoint ck;
        ck.params = std::move(result.params);
        ck.config = flags.cfg;
        ck.seed = flags.seed;
        ck.task = flags.task;
        ck.regime = flags.regime;
        ck.report = result.report;
        recnet::save_checkpoint(out, ck);
        std::cout << "accuracy " << result.report.final_accuracy << " after "
                  << result.report.epochs_used << " epochs (" << result.report.restarts
                  << " restarts), checkpoint: " << out << "\n";
        return 0;
    } catch (const recnet::TrainingFailed& e) {
        std::cerr << e.what() << " (best accuracy " << e.best_report.final_accuracy << ")\n";
        return 1;
    }
}

int cmd_analyze(const std::string& checkpoint, const std::string& out_dir, int analysis_delay,
                int analysis_episodes) {
    const auto ck = recnet::load_checkpoint(checkpoint);
    experiment::ExperimentConfig cfg;
    cfg.analysis_delay = analysis_delay;
    cfg.analysis_episodes = analysis_episodes;
    experiment::CellKey key{taskgen::task_from_string(ck.task), ck.params.arch,
                            taskgen::DelayRegime::from_name(ck.regime), 0};
    const auto files = experiment::analyze_network(ck.params, key.task, key, ck.seed, cfg, out_dir);
    std::cout << "wrote " << files.size() << " files to " << out_dir << "\n";
    return 0;
}

int cmd_sweep(const experiment::ExperimentConfig& cfg) {
    const auto manifest = experiment::run_experiment(cfg);
    int failed = 0;
    for (const auto& c : manifest.cells)
        if (c.status != "ok") {
            ++failed;
            std::cerr << "cell failed: " << c.key.dir() << " (best accuracy "
                      << c.final_accuracy << ")\n";
        }
    std::cout << manifest.cells.size() - failed << "/" << manifest.cells.size()
              << " cells complete, manifest: " << cfg.output_dir << "/manifest.json\n";
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"information-relay analysis of small recurrent networks"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a dataset CSV");
    std::string gen_task = "memory", gen_regime = "rand15", gen_out = "dataset.csv";
    int gen_episodes = 800;
    uint64_t gen_seed = 1;
    gen->add_option("--task", gen_task, "memory or block");
    gen->add_option("--episodes", gen_episodes, "episode count (multiple of 8)");
    gen->add_option("--regime", gen_regime, "fixed1..5, rand15, or eval0..9");
    gen->add_option("--seed", gen_seed, "dataset seed");
    gen->add_option("--out", gen_out, "output CSV path");

    // train
    auto* train = app.add_subcommand("train", "train one network and save a checkpoint");
    TrainFlags train_flags;
    train_flags.attach(train);
    std::string train_out = "checkpoint.json";
    train->add_option("--out", train_out, "checkpoint path");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "relay/knockout/temporal/latent analyses");
    std::string an_checkpoint, an_out = "analysis";
    int an_delay = 5, an_episodes = 800;
    analyze->add_option("--checkpoint", an_checkpoint, "checkpoint path")->required();
    analyze->add_option("--out", an_out, "output directory");
    analyze->add_option("--analysis-delay", an_delay, "delay of the analysis dataset");
    analyze->add_option("--episodes", an_episodes, "analysis dataset size");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "full replicate sweep with manifest");
    std::string sw_config;
    experiment::ExperimentConfig sw_cfg;
    std::vector<std::string> sw_tasks, sw_archs, sw_regimes;
    sweep->add_option("--config", sw_config, "JSON config file (flags override it)");
    sweep->add_option("--tasks", sw_tasks, "task list");
    sweep->add_option("--archs", sw_archs, "architecture list");
    sweep->add_option("--regimes", sw_regimes, "delay regime list");
    auto* sw_reps = sweep->add_option("--replicates", sw_cfg.replicates, "replicates per cell");
    auto* sw_seed = sweep->add_option("--base-seed", sw_cfg.base_seed, "base seed");
    auto* sw_out = sweep->add_option("--out", sw_cfg.output_dir, "output directory");
    auto* sw_workers = sweep->add_option("--workers", sw_cfg.workers, "parallel workers (0 = auto)");

    // summarize
    auto* summ = app.add_subcommand("summarize", "aggregate tables from a manifest");
    std::string su_manifest, su_out = "summary";
    summ->add_option("--manifest", su_manifest, "manifest path")->required();
    summ->add_option("--out", su_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_task, gen_episodes, gen_regime, gen_seed, gen_out);
        if (train->parsed()) return cmd_train(train_flags, train_out);
        if (analyze->parsed()) return cmd_analyze(an_checkpoint, an_out, an_delay, an_episodes);
        if (sweep->parsed()) {
            experiment::ExperimentConfig cfg;
            if (!sw_config.empty()) cfg = experiment::load_config(sw_config);
            if (!sw_tasks.empty()) {
                cfg.tasks.clear();
                for (const auto& t : sw_tasks) cfg.tasks.push_back(taskgen::task_from_string(t));
            }
            if (!sw_archs.empty()) {
                cfg.archs.clear();
                for (const auto& a : sw_archs) cfg.archs.push_back(recnet::arch_from_string(a));
            }
            if (!sw_regimes.empty()) {
                cfg.regimes.clear();
                for (const auto& r : sw_regimes)
                    cfg.regimes.push_back(taskgen::DelayRegime::from_name(r));
            }
            if (!sw_reps->empty()) cfg.replicates = sw_cfg.replicates;
            if (!sw_seed->empty()) cfg.base_seed = sw_cfg.base_seed;
            if (!sw_out->empty()) cfg.output_dir = sw_cfg.output_dir;
            if (!sw_workers->empty()) cfg.workers = sw_cfg.workers;
            return cmd_sweep(cfg);
        }
        if (summ->parsed()) {
            experiment::summarize(experiment::load_manifest(su_manifest), su_out);
            std::cout << "wrote summary tables to " << su_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
