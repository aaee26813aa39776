#include "lmfrank/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>

#include <CLI11.hpp>

#include "lmfrank/error.hpp"

namespace lmfrank {

namespace {

void require_interactions(const RunConfig& config) {
    if (config.data.interactions.empty()) {
        throw UsageError("missing interactions path (--interactions or interactions = ...)");
    }
}

void validate_settings(const RunConfig& config) {
    try {
        config.hyper.validate();
        config.scheme.validate();
    } catch (const UsageError&) {
        throw;
    } catch (const InputError& e) {
        throw UsageError(e.what());
    }
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    return out;
}

void write_settings_header(std::ostream& out, const RunConfig& config, const Hyperparameters& hyper) {
    RunConfig effective = config;
    effective.hyper = hyper;
    for (const auto& [key, value] : describe(effective)) {
        out << "# " << key << " = " << value << '\n';
    }
}

}  // namespace

PreparedRun prepare_run(const RunConfig& config) {
    require_interactions(config);
    validate_settings(config);
    PreparedRun run;
    run.data = load_dataset(config.data);
    run.hyper = config.hyper;
    run.hyper.seed = config.seed;
    if (!run.data.go) {
        run.hyper.alpha = 0.0;
    }
    if (!run.data.ppi) {
        run.hyper.beta = 0.0;
    }
    if (run.data.go && (run.hyper.alpha != 0.0 || config.dump_adjacency)) {
        run.go_adjacency = build_knn(*run.data.go, config.k1);
        if (run.hyper.alpha != 0.0) {
            run.go = laplacian(*run.go_adjacency);
        }
    }
    if (run.data.ppi && (run.hyper.beta != 0.0 || config.dump_adjacency)) {
        run.ppi_adjacency = build_knn(*run.data.ppi, config.k2);
        if (run.hyper.beta != 0.0) {
            run.ppi = laplacian(*run.ppi_adjacency);
        }
    }
    if (config.dump_adjacency) {
        if (run.go_adjacency) {
            write_adjacency(config.output_dir / "adjacency_go.tsv", *run.go_adjacency, run.data.index);
        }
        if (run.ppi_adjacency) {
            write_adjacency(config.output_dir / "adjacency_ppi.tsv", *run.ppi_adjacency, run.data.index);
        }
    }
    return run;
}

FactorModel cmd_train(const RunConfig& config, std::ostream& log) {
    std::filesystem::create_directories(config.output_dir);
    const PreparedRun run = prepare_run(config);
    const WeightView weights(run.data.interactions, config.scheme);
    const Objective objective{weights, run.go_ptr(), run.ppi_ptr()};

    auto train_log = open_output(config.output_dir / "train.log");
    write_settings_header(train_log, config, run.hyper);
    train_log << "# entities = " << run.data.index.size()
              << ", positives = " << run.data.interactions.size() << '\n';
    train_log << "iteration\tloss\tgradient_norm\n";

    TrainOptions options;
    options.kernel.block_size = config.block_size;
    options.kernel.threads = std::max<std::size_t>(1, config.threads);
    options.log_every = config.log_every;
    options.on_log = [&](const TrainingLog& entry) {
        train_log << entry.iteration << '\t' << entry.loss << '\t' << entry.gradient_norm << '\n';
    };

    FactorModel model = train(objective, run.hyper, options);
    model.entity_names = run.data.index.names();
    train_log << "# final loss = " << model.final_loss << " after " << model.iterations
              << " iterations\n";
    save_model(config.model_path(), model);
    log << "trained " << model.entity_count() << " x " << model.hyper.d << " factors, loss "
        << model.initial_loss << " -> " << model.final_loss << "; wrote "
        << config.model_path().string() << '\n';
    return model;
}

void write_metric_report(const std::filesystem::path& dir, const MetricReport& report,
                         const RunConfig& config) {
    auto txt = open_output(dir / "metrics.txt");
    txt << std::setprecision(6) << std::fixed;
    txt << "cross-validation: " << report.folds.size() << " folds, aupr mode "
        << to_string(config.aupr_mode) << '\n';
    txt << "fold\tauc\taupr\ttest_positives\tcandidates\n";
    for (std::size_t f = 0; f < report.folds.size(); ++f) {
        const auto& r = report.folds[f];
        txt << f + 1 << '\t' << r.auc << '\t' << r.aupr << '\t' << r.test_positives << '\t'
            << r.candidates << '\n';
    }
    txt << "AUC  " << report.auc_mean << " +/- " << report.auc_sd << '\n';
    txt << "AUPR " << report.aupr_mean << " +/- " << report.aupr_sd << '\n';

    auto kv = open_output(dir / "metrics.kv");
    kv << "auc_mean=" << report.auc_mean << '\n';
    kv << "auc_sd=" << report.auc_sd << '\n';
    kv << "aupr_mean=" << report.aupr_mean << '\n';
    kv << "aupr_sd=" << report.aupr_sd << '\n';
    kv << "n_folds=" << report.folds.size() << '\n';
    for (std::size_t f = 0; f < report.folds.size(); ++f) {
        const auto& r = report.folds[f];
        kv << "fold" << f + 1 << "_auc=" << r.auc << '\n';
        kv << "fold" << f + 1 << "_aupr=" << r.aupr << '\n';
        kv << "fold" << f + 1 << "_test_positives=" << r.test_positives << '\n';
        kv << "fold" << f + 1 << "_candidates=" << r.candidates << '\n';
    }
}

MetricReport cmd_cv(const RunConfig& config, std::ostream& log) {
    if (config.n_folds < 2) {
        throw UsageError("n_folds must be at least 2 to cross-validate");
    }
    std::filesystem::create_directories(config.output_dir);
    const PreparedRun run = prepare_run(config);
    CvOptions options;
    options.n_folds = config.n_folds;
    options.seed = config.seed;
    options.threads = std::max<std::size_t>(1, config.threads);
    options.block_size = config.block_size;
    options.aupr_mode = config.aupr_mode;
    const MetricReport report = cross_validate(run.data.interactions, run.go_ptr(), run.ppi_ptr(),
                                               run.hyper, config.scheme, options);
    RunConfig effective = config;
    effective.hyper = run.hyper;
    write_metric_report(config.output_dir, report, effective);
    log << std::setprecision(4) << std::fixed << "AUC " << report.auc_mean << " +/- "
        << report.auc_sd << ", AUPR " << report.aupr_mean << " +/- " << report.aupr_sd << '\n';
    log << std::defaultfloat;
    return report;
}

std::vector<RankedPair> cmd_rank(const RunConfig& config, std::ostream& log) {
    require_interactions(config);
    const Dataset data = load_dataset(config.data);
    const FactorModel model = load_model(config.model_path());
    if (model.entity_count() != data.index.size()) {
        throw InputError("model has " + std::to_string(model.entity_count()) +
                         " entities but the data index has " + std::to_string(data.index.size()));
    }
    if (!model.entity_names.empty() && model.entity_names != data.index.names()) {
        throw InputError("model entity names do not match the data index");
    }
    const auto ranked = rank_unobserved(model, data.interactions, config.top_k, config.block_size);
    auto out = open_output(config.output_dir / "rankings.tsv");
    out << "# name_a\tname_b\tprobability\n";
    for (const auto& r : ranked) {
        out << data.index.name(r.pair.first) << '\t' << data.index.name(r.pair.second) << '\t'
            << r.score << '\n';
    }
    log << "ranked " << ranked.size() << " candidate pairs into "
        << (config.output_dir / "rankings.tsv").string() << '\n';
    return ranked;
}

SyntheticFiles cmd_synth(const RunConfig& config, std::ostream& log) {
    SyntheticSpec spec = config.synth;
    spec.seed = config.seed;
    try {
        spec.validate();
    } catch (const InputError& e) {
        throw UsageError(e.what());
    }
    const SyntheticData data = generate(spec);
    const SyntheticFiles files = write_synthetic(config.output_dir, data);
    log << "wrote " << data.index.size() << " entities, " << data.observed.size()
        << " positives into " << config.output_dir.string() << '\n';
    return files;
}

void cmd_inspect(const RunConfig& config, std::ostream& out) {
    require_interactions(config);
    const Dataset data = load_dataset(config.data);
    const auto m = data.index.size();
    out << std::setprecision(6);
    out << "entities: " << m << '\n';
    out << "interactions: " << data.interactions.size() << '\n';
    if (m >= 2) {
        out << "interaction sparsity: " << 100.0 * (1.0 - density(data.interactions)) << "%\n";
    }
    for (const auto* sim : {data.go ? &*data.go : nullptr, data.ppi ? &*data.ppi : nullptr}) {
        if (sim == nullptr) {
            continue;
        }
        out << sim->tag() << " similarities: " << sim->size();
        if (m >= 2) {
            out << " (sparsity " << 100.0 * (1.0 - density(*sim)) << "%)";
        }
        std::size_t isolated = 0;
        for (EntityId i = 0; i < m; ++i) {
            isolated += sim->neighbors(i).empty() ? 1 : 0;
        }
        out << ", entities without neighbors: " << isolated << '\n';
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Logistic matrix factorization with Laplacian neighborhood regularization", "lmfrank"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    struct Sub {
        CLI::App* app;
        std::string config_file;
        std::map<std::string, std::string> values;
    };
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"train", "Fit a model on the full interaction data"},
        {"cv", "Cross-validate and report AUC / AUPR"},
        {"rank", "Rank unobserved pairs with a trained model"},
        {"synth", "Generate a planted synthetic dataset"},
        {"inspect", "Print dataset statistics"},
    };
    std::map<std::string, Sub> subs;
    for (const auto& [name, description] : commands) {
        Sub& sub = subs[name];
        sub.app = app.add_subcommand(name, description);
        sub.app->add_option("--config", sub.config_file, "key = value settings file");
        for (const auto& key : setting_keys()) {
            sub.app->add_option("--" + std::string(key.key), sub.values[std::string(key.key)],
                                std::string(key.help));
        }
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) {
        reversed.pop_back();  // program name
    }
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        for (auto& [name, sub] : subs) {
            if (!sub.app->parsed()) {
                continue;
            }
            RunConfig config;
            if (const char* env = std::getenv("LMFRANK_THREADS"); env != nullptr && *env != '\0') {
                apply_setting(config, "threads", env);
            }
            if (!sub.config_file.empty()) {
                apply_config_file(config, sub.config_file);
            }
            for (const auto& key : setting_keys()) {
                if (sub.app->count("--" + std::string(key.key)) > 0) {
                    apply_setting(config, key.key, sub.values[std::string(key.key)]);
                }
            }
            if (name == "train") {
                cmd_train(config, out);
            } else if (name == "cv") {
                cmd_cv(config, out);
            } else if (name == "rank") {
                cmd_rank(config, out);
            } else if (name == "synth") {
                cmd_synth(config, out);
            } else {
                cmd_inspect(config, out);
            }
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace lmfrank
