// denolab command line: ingest, label, denoise, train-svm, indicators,
// diff-signals, run, report.
//
// Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numerical
// failure.

#include "denolab/denolab.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using namespace denolab;

namespace {

// Settings collected from flags, applied after the config file.
struct Overrides {
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> entries;

    ExperimentConfig resolve() const {
        ExperimentConfig c;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw ConfigError("cannot read config file " + config_file);
            std::ostringstream buf;
            buf << in.rdbuf();
            c = parse_config_text(buf.str(), c);
        }
        for (const auto& [k, v] : entries) apply_config_entry(c, k, v);
        return c;
    }
};

void setting(CLI::App* app, Overrides& ov, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [&ov, key](const std::string& v) { ov.entries.emplace_back(key, v); }, help);
}

void data_options(CLI::App* app, Overrides& ov) {
    setting(app, ov, "--data", "data", "price CSV file");
    setting(app, ov, "--date-column", "date_column", "timestamp column name (default date)");
    setting(app, ov, "--price-column", "price_column", "close price column name (default close)");
    app->add_flag_callback(
        "--skip-bad-rows", [&ov] { ov.entries.emplace_back("skip_bad_rows", "true"); },
        "skip unparseable rows instead of failing");
}

void experiment_options(CLI::App* app, Overrides& ov) {
    app->add_option("--config", ov.config_file, "key = value config file");
    data_options(app, ov);
    setting(app, ov, "--seed", "seed", "random seed");
    setting(app, ov, "--tau-grid", "tau_grid", "comma separated tau values");
    setting(app, ov, "--tau-points", "tau_points", "size of the default tau grid");
    setting(app, ov, "--split", "split", "training fraction in (0, 1)");
    setting(app, ov, "--leakage-mode", "leakage_mode", "train_segment_only | full_series");
    setting(app, ov, "--structure", "structure", "sma | ema | combined");
    setting(app, ov, "--l2", "l2", "shortest moving average window");
    setting(app, ov, "--lk", "lk", "longest moving average window");
    setting(app, ov, "--epochs", "epochs", "autoencoder epochs");
    setting(app, ov, "--learning-rate", "learning_rate", "autoencoder learning rate");
    setting(app, ov, "--optimizer", "optimizer", "adam | sgd");
    setting(app, ov, "--feature-window", "feature_window", "returns per SVM sample");
    setting(app, ov, "--svm-c", "svm_c", "SVM box constraint");
    setting(app, ov, "--svm-gamma", "svm_gamma", "RBF gamma or 'scale'");
    setting(app, ov, "--workers", "workers", "threads for the tau sweep (0 = all cores)");
    setting(app, ov, "--out", "output_dir", "output directory");
}

void indicator_options(CLI::App* app, Overrides& ov) {
    setting(app, ov, "--ma-short", "ma_short", "short moving average window");
    setting(app, ov, "--ma-long", "ma_long", "long moving average window");
    setting(app, ov, "--macd-fast", "macd_fast", "MACD fast EMA");
    setting(app, ov, "--macd-slow", "macd_slow", "MACD slow EMA");
    setting(app, ov, "--macd-signal", "macd_signal", "MACD signal EMA");
    setting(app, ov, "--bb-window", "bb_window", "Bollinger window");
    setting(app, ov, "--bb-k", "bb_k", "Bollinger band width in standard deviations");
}

// Writes to `path`, or stdout when it is empty or "-".
template <class Fn>
void with_output(const std::string& path, Fn fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        return;
    }
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    fn(out);
}

void save_bytes(const fs::path& path, const std::string& bytes) { write_text_file(path, bytes); }

int run_ingest(const Overrides& ov, const std::string& out) {
    auto cfg = ov.resolve();
    auto r = load_series(cfg);
    with_output(out, [&](std::ostream& o) { write_price_csv(o, r.series, cfg.schema); });
    std::cerr << "ingested " << r.series.size() << " rows, skipped " << r.skipped_rows << "\n";
    return 0;
}

int run_label(const Overrides& ov, std::optional<double> tau, bool sweep, const std::string& out) {
    auto cfg = ov.resolve();
    auto series = load_series(cfg).series;
    auto returns = log_returns(series);
    if (tau && !sweep) {
        auto labels = naive_label(returns, *tau);
        with_output(out, [&](std::ostream& o) { write_labels_csv(o, series, returns, labels); });
        auto c = count_classes(labels);
        std::cerr << "up " << c.count_up << ", down " << c.count_down << ", none " << c.count_none << "\n";
        return 0;
    }
    auto counts = class_counts_sweep(returns, resolve_tau_grid(cfg, returns));
    with_output(out, [&](std::ostream& o) { write_class_counts_csv(o, counts); });
    return 0;
}

int run_denoise(const Overrides& ov) {
    auto cfg = ov.resolve();
    cfg.validate();
    auto series = load_series(cfg).series;
    auto res = run_pretext(cfg, series);
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    PriceSeries denoised(series.timestamps(), res.denoised.prices);
    with_output((dir / "denoised.csv").string(), [&](std::ostream& o) { write_price_csv(o, denoised, cfg.schema); });
    save_bytes(dir / "autoencoder.bin", encode_checkpoint(res.model));
    save_bytes(dir / "features.bin", encode_features(res.features));
    with_output((dir / "loss_history.csv").string(),
                [&](std::ostream& o) { write_loss_history_csv(o, res.diagnostics); });
    const auto& d = res.diagnostics;
    std::cout << "epochs " << d.epochs_run << (d.early_stopped ? " (early stop)" : "") << ", loss "
              << format_double(d.initial_loss) << " -> " << format_double(d.final_loss) << ", TV ratio "
              << format_fixed(d.tv_ratio, 4) << ", model " << d.model_fingerprint << "\n";
    return 0;
}

int run_train_svm(const Overrides& ov, double tau) {
    auto cfg = ov.resolve();
    cfg.validate();
    auto series = load_series(cfg).series;
    auto returns = log_returns(series);
    auto samples = featurize(series.prices(), naive_label(returns, tau), cfg.feature_window);
    const std::size_t cut = sample_split_index(samples.size(), cfg.split);
    if (cut < 1 || cut >= samples.size()) throw SeriesTooShort("split leaves an empty train or test set");
    auto train_set = samples.subset(0, cut);
    auto test_set = samples.subset(cut, samples.size());
    auto model = train_svm(train_set, cfg.svm);
    auto predicted = predict(model, test_set.features);
    auto f1 = f1_scores(predicted, test_set.targets);
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    save_bytes(dir / "svm.bin", encode_svm(model));
    with_output((dir / "predictions.csv").string(),
                [&](std::ostream& o) { write_predictions_csv(o, series, test_set, predicted); });
    for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "train " << train_set.size() << ", test " << test_set.size() << ", macro F1 "
              << format_fixed(f1.macro_f1, 4) << ", weighted F1 " << format_fixed(f1.weighted_f1, 4) << "\n";
    return 0;
}

int run_indicators(const Overrides& ov, const std::string& which, const std::string& exec_path,
                   const std::string& out) {
    auto cfg = ov.resolve();
    auto series = load_series(cfg).series;
    std::optional<PriceSeries> exec;
    if (!exec_path.empty()) {
        IngestOptions opts{cfg.schema, cfg.skip_bad_rows, {}};
        exec = ingest_csv(exec_path, opts).series;
        if (exec->timestamps() != series.timestamps())
            throw ShapeMismatch("execution price file has different timestamps");
    }
    std::vector<IndicatorKind> kinds;
    if (which == "all")
        kinds = {IndicatorKind::ma_cross, IndicatorKind::macd, IndicatorKind::bb};
    else
        kinds = {parse_indicator(which)};
    std::vector<BuySignal> all;
    for (auto k : kinds) {
        auto s = indicator_buys(k, series.prices(), cfg.indicators);
        if (exec)
            annotate_signals(s, series.timestamps(), exec->prices());
        else
            annotate_signals(s, series.timestamps());
        all.insert(all.end(), s.begin(), s.end());
    }
    with_output(out, [&](std::ostream& o) { write_signals_csv(o, all); });
    return 0;
}

std::vector<BuySignal> read_signals_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path);
    return read_signals_csv(in);
}

int run_diff(const std::string& orig_path, const std::string& den_path, std::size_t window, const std::string& out,
             const std::string& md) {
    auto original = read_signals_file(orig_path);
    auto denoised = read_signals_file(den_path);
    std::ostringstream csv, markdown;
    bool header = true;
    for (auto k : {IndicatorKind::ma_cross, IndicatorKind::macd, IndicatorKind::bb}) {
        std::vector<BuySignal> a, b;
        for (const auto& s : original)
            if (s.indicator == k) a.push_back(s);
        for (const auto& s : denoised)
            if (s.indicator == k) b.push_back(s);
        if (a.empty() && b.empty()) continue;
        auto diff = diff_signals(a, b, window);
        write_diff_csv(csv, diff, to_string(k), header);
        header = false;
        write_diff_markdown(markdown, diff, to_string(k));
        markdown << '\n';
    }
    if (header) write_diff_csv(csv, SignalDiff{}, "", true);
    with_output(out, [&](std::ostream& o) { o << csv.str(); });
    if (!md.empty()) with_output(md, [&](std::ostream& o) { o << markdown.str(); });
    return 0;
}

int run_run(const Overrides& ov) {
    auto cfg = ov.resolve();
    cfg.validate();
    auto loaded = load_series(cfg);
    auto report = run_experiment(cfg, loaded.series);
    if (loaded.skipped_rows)
        report.warnings.push_back("skipped " + std::to_string(loaded.skipped_rows) + " unparseable rows");
    emit_report(report, cfg.output_dir);
    const auto cs = contrast_summary(report);
    std::cout << "tau values " << cs.taus << ", Workflow 2 not worse at " << cs.workflow2_not_worse
              << ", mean relative macro-F1 change " << format_fixed(100.0 * cs.mean_relative_improvement, 2)
              << "%, TV ratio " << format_fixed(report.denoise.tv_ratio, 4) << "\n";
    std::cout << "report written to " << cfg.output_dir << "\n";
    return 0;
}

int run_report(const std::string& from, const std::string& out) {
    auto report = load_report(from);
    for (const auto& name : emit_report(report, out)) std::cout << (fs::path(out) / name).string() << "\n";
    return 0;
}

int exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::usage: return 1;
        case ErrorCategory::data: return 2;
        case ErrorCategory::numerical: return 3;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Denoising-autoencoder labels for price series"};
    app.require_subcommand(1);

    Overrides ov;
    std::string out_file, out_dir = "out", from, exec_prices, which = "all", orig_file, den_file, md_file;
    std::optional<double> tau;
    double svm_tau = 0.0;
    bool sweep = false;
    std::size_t match_window = 5;
    int rc = 0;

    auto* ingest = app.add_subcommand("ingest", "parse and validate a price CSV");
    data_options(ingest, ov);
    ingest->add_option("--out", out_file, "normalized CSV (default stdout)");

    auto* label = app.add_subcommand("label", "naive labels at one tau, or class counts over a tau grid");
    label->add_option("--config", ov.config_file, "key = value config file");
    data_options(label, ov);
    label->add_option("--tau", tau, "threshold for a single label series");
    label->add_flag("--sweep", sweep, "class counts over the tau grid");
    setting(label, ov, "--tau-grid", "tau_grid", "comma separated tau values");
    setting(label, ov, "--tau-points", "tau_points", "size of the default tau grid");
    label->add_option("--out", out_file, "output CSV (default stdout)");

    auto* denoise = app.add_subcommand("denoise", "train the autoencoder and write the denoised series");
    experiment_options(denoise, ov);

    auto* svm = app.add_subcommand("train-svm", "train the SVM on naive labels and score the test split");
    experiment_options(svm, ov);
    svm->add_option("--tau", svm_tau, "label threshold (default 0)");

    auto* ind = app.add_subcommand("indicators", "buy signals from MA crossover, MACD and Bollinger bands");
    ind->add_option("--config", ov.config_file, "key = value config file");
    data_options(ind, ov);
    indicator_options(ind, ov);
    ind->add_option("--indicator", which, "ma_cross | macd | bb | all");
    ind->add_option("--execution-prices", exec_prices, "price CSV whose closes price the signals");
    ind->add_option("--out", out_file, "signals CSV (default stdout)");

    auto* diff = app.add_subcommand("diff-signals", "match original and denoised buy signals");
    diff->add_option("--original", orig_file, "signals CSV from the original series")->required();
    diff->add_option("--denoised", den_file, "signals CSV from the denoised series")->required();
    diff->add_option("--match-window", match_window, "largest index gap for a match");
    diff->add_option("--out", out_file, "diff CSV (default stdout)");
    diff->add_option("--markdown", md_file, "side-by-side markdown table");

    auto* run = app.add_subcommand("run", "full two-workflow experiment and report");
    experiment_options(run, ov);
    indicator_options(run, ov);

    auto* report = app.add_subcommand("report", "re-emit report files from a report.json");
    report->add_option("--from", from, "report.json")->required();
    report->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*ingest) rc = run_ingest(ov, out_file);
        else if (*label) rc = run_label(ov, tau, sweep || !tau, out_file);
        else if (*denoise) rc = run_denoise(ov);
        else if (*svm) rc = run_train_svm(ov, svm_tau);
        else if (*ind) rc = run_indicators(ov, which, exec_prices, out_file);
        else if (*diff) rc = run_diff(orig_file, den_file, match_window, out_file, md_file);
        else if (*run) rc = run_run(ov);
        else if (*report) rc = run_report(from, out_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}
