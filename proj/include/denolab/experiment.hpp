#pragma once

#include "denolab/autoencoder.hpp"
#include "denolab/error.hpp"
#include "denolab/features.hpp"
#include "denolab/indicators.hpp"
#include "denolab/labeling.hpp"
#include "denolab/market_data.hpp"
#include "denolab/metrics.hpp"
#include "denolab/svm.hpp"
#include "denolab/util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace denolab {

// Whether the autoencoder and scaler may see prices past the split boundary.
enum class LeakageMode { train_segment_only, full_series };

inline const char* to_string(LeakageMode m) {
    return m == LeakageMode::train_segment_only ? "train_segment_only" : "full_series";
}

inline LeakageMode parse_leakage_mode(std::string_view s) {
    if (s == "train_segment_only") return LeakageMode::train_segment_only;
    if (s == "full_series") return LeakageMode::full_series;
    throw ConfigError("unknown leakage mode '" + std::string(s) + "'");
}

struct ExperimentConfig {
    std::string data_path;
    CsvSchema schema;
    bool skip_bad_rows = false;

    std::vector<double> tau_grid;  // empty: tau_points values from 0 to the tau_quantile of |r|
    std::size_t tau_points = 21;
    double tau_quantile = 0.9;
    double split = 0.8;

    int l2 = 2;
    int lk = 21;
    PureStructure structure = PureStructure::combined;
    Architecture architecture;  // channels is derived from l2/lk/structure
    TrainConfig train;
    std::uint64_t seed = 42;
    LeakageMode leakage = LeakageMode::train_segment_only;

    SvmConfig svm;
    int feature_window = 10;

    IndicatorParams indicators;
    std::size_t match_window = 5;

    std::string output_dir = "out";
    unsigned workers = 0;  // 0: hardware concurrency

    void validate() const {
        if (!(split > 0.0 && split < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
        if (tau_grid.empty() && tau_points == 0) throw ConfigError("tau grid is empty");
        if (!tau_grid.empty()) validate_tau_grid(tau_grid);
        if (!(tau_quantile > 0.0 && tau_quantile <= 1.0)) throw ConfigError("tau quantile must lie in (0, 1]");
        if (l2 < 2 || lk < l2) throw ConfigError("need 2 <= l2 <= lk");
        if (feature_window < 1) throw ConfigError("feature window must be >= 1");
        train.validate();
        svm.validate();
    }
};

// One workflow's downstream result at one tau.
struct WorkflowOutcome {
    F1Result f1;
    ClassCounts counts;  // over the whole label series of this workflow's price source
    std::size_t train_samples = 0;
    std::size_t test_samples = 0;
    bool degenerate = false;  // single-class training data, constant classifier
    std::vector<std::string> warnings;

    bool operator==(const WorkflowOutcome&) const = default;
};

struct TauResult {
    double tau = 0.0;
    WorkflowOutcome workflow1;
    WorkflowOutcome workflow2;

    bool operator==(const TauResult&) const = default;
};

struct DenoiseDiagnostics {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::size_t epochs_run = 0;
    bool early_stopped = false;
    double max_channel_spread = 0.0;
    double tv_original = 0.0;
    double tv_denoised = 0.0;
    double tv_ratio = 0.0;
    std::string model_fingerprint;
    std::vector<double> loss_history;
    std::vector<std::size_t> loss_flags;  // epochs with a >5% loss increase after epoch 5
    std::size_t fit_end = 0;  // autoencoder and scaler saw columns [0, fit_end)
    bool leaking = false;

    bool operator==(const DenoiseDiagnostics&) const = default;
};

struct IndicatorComparison {
    IndicatorKind indicator = IndicatorKind::ma_cross;
    std::vector<BuySignal> original;
    std::vector<BuySignal> denoised;  // found on X', priced at the original close
    SignalDiff diff;

    bool operator==(const IndicatorComparison&) const = default;
};

struct ExperimentReport {
    std::string config_fingerprint;
    std::string data_fingerprint;
    std::uint64_t seed = 0;
    std::string config_text;  // canonical key=value echo of the configuration
    std::size_t n = 0;
    std::size_t sample_split = 0;  // SVM samples [0, sample_split) train, the rest test
    std::vector<TauResult> per_tau;
    DenoiseDiagnostics denoise;
    std::vector<IndicatorComparison> indicators;
    std::vector<std::string> timestamps;
    std::vector<double> original_prices;
    std::vector<double> denoised_prices;
    std::vector<std::string> warnings;

    bool operator==(const ExperimentReport&) const = default;
};

// Canonical text of every setting that affects results; the fingerprint
// hashes it. Output directory and worker count are excluded.
inline std::string canonical_config(const ExperimentConfig& c) {
    std::string out;
    auto kv = [&](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
    kv("data", c.data_path);
    kv("date_column", c.schema.timestamp_column);
    kv("price_column", c.schema.price_column);
    kv("skip_bad_rows", c.skip_bad_rows ? "true" : "false");
    std::string grid;
    for (double t : c.tau_grid) grid += (grid.empty() ? "" : ",") + format_double(t);
    kv("tau_grid", grid);
    kv("tau_points", std::to_string(c.tau_points));
    kv("tau_quantile", format_double(c.tau_quantile));
    kv("split", format_double(c.split));
    kv("l2", std::to_string(c.l2));
    kv("lk", std::to_string(c.lk));
    kv("structure", to_string(c.structure));
    kv("hidden", std::to_string(c.architecture.hidden));
    kv("bottleneck", std::to_string(c.architecture.bottleneck));
    kv("kernel", std::to_string(c.architecture.kernel_size));
    kv("epochs", std::to_string(c.train.epochs));
    kv("learning_rate", format_double(c.train.learning_rate));
    kv("optimizer", to_string(c.train.optimizer));
    kv("patience", c.train.patience ? std::to_string(*c.train.patience) : "none");
    kv("window_cols", std::to_string(c.train.window_cols));
    kv("window_stride", std::to_string(c.train.window_stride));
    kv("seed", std::to_string(c.seed));
    kv("leakage_mode", to_string(c.leakage));
    kv("svm_c", format_double(c.svm.C));
    kv("svm_gamma", c.svm.fixed_gamma ? format_double(*c.svm.fixed_gamma) : "scale");
    kv("svm_tolerance", format_double(c.svm.kkt_tolerance));
    kv("svm_max_passes", std::to_string(c.svm.max_passes));
    kv("svm_max_samples", std::to_string(c.svm.max_samples));
    kv("feature_window", std::to_string(c.feature_window));
    kv("ma_short", std::to_string(c.indicators.ma_short));
    kv("ma_long", std::to_string(c.indicators.ma_long));
    kv("macd_fast", std::to_string(c.indicators.macd_fast));
    kv("macd_slow", std::to_string(c.indicators.macd_slow));
    kv("macd_signal", std::to_string(c.indicators.macd_signal));
    kv("bb_window", std::to_string(c.indicators.bb_window));
    kv("bb_k", format_double(c.indicators.bb_k));
    kv("match_window", std::to_string(c.match_window));
    return out;
}

namespace detail {

inline double config_double(const std::string& key, std::string_view v) {
    auto d = parse_double(v);
    if (!d) throw ConfigError(key + ": expected a number, got '" + std::string(v) + "'");
    return *d;
}

inline long long config_int(const std::string& key, std::string_view v, long long lo) {
    auto i = parse_int(v);
    if (!i || *i < lo) throw ConfigError(key + ": expected an integer >= " + std::to_string(lo) + ", got '" +
                                         std::string(v) + "'");
    return *i;
}

inline bool config_bool(const std::string& key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + std::string(v) + "'");
}

}  // namespace detail

inline std::vector<double> parse_tau_grid(std::string_view text) {
    std::vector<double> grid;
    text = trim(text);
    if (text.empty()) return grid;
    for (const auto& item : split_csv_line(text)) grid.push_back(detail::config_double("tau_grid", item));
    validate_tau_grid(grid);
    return grid;
}

// One key=value setting, using the same keys as canonical_config plus
// output_dir and workers.
inline void apply_config_entry(ExperimentConfig& c, const std::string& key, std::string_view raw) {
    using detail::config_bool, detail::config_double, detail::config_int;
    const std::string_view v = trim(raw);
    auto size = [&](long long lo = 0) { return static_cast<std::size_t>(config_int(key, v, lo)); };
    auto integer = [&](long long lo = 0) { return static_cast<int>(config_int(key, v, lo)); };
    if (key == "data") c.data_path = v;
    else if (key == "date_column") c.schema.timestamp_column = v;
    else if (key == "price_column") c.schema.price_column = v;
    else if (key == "skip_bad_rows") c.skip_bad_rows = config_bool(key, v);
    else if (key == "tau_grid") c.tau_grid = parse_tau_grid(v);
    else if (key == "tau_points") c.tau_points = size(1);
    else if (key == "tau_quantile") c.tau_quantile = config_double(key, v);
    else if (key == "split") c.split = config_double(key, v);
    else if (key == "l2") c.l2 = integer(2);
    else if (key == "lk") c.lk = integer(2);
    else if (key == "structure") c.structure = parse_structure(v);
    else if (key == "hidden") c.architecture.hidden = size(1);
    else if (key == "bottleneck") c.architecture.bottleneck = size(1);
    else if (key == "kernel") c.architecture.kernel_size = size(1);
    else if (key == "epochs") c.train.epochs = integer(0);
    else if (key == "learning_rate") c.train.learning_rate = config_double(key, v);
    else if (key == "optimizer") c.train.optimizer = parse_optimizer(v);
    else if (key == "patience") c.train.patience = v == "none" ? std::nullopt : std::optional<int>(integer(1));
    else if (key == "window_cols") c.train.window_cols = size(1);
    else if (key == "window_stride") c.train.window_stride = size(1);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(config_int(key, v, 0));
    else if (key == "leakage_mode") c.leakage = parse_leakage_mode(v);
    else if (key == "svm_c") c.svm.C = config_double(key, v);
    else if (key == "svm_gamma") c.svm.fixed_gamma = v == "scale" ? std::nullopt : std::optional(config_double(key, v));
    else if (key == "svm_tolerance") c.svm.kkt_tolerance = config_double(key, v);
    else if (key == "svm_max_passes") c.svm.max_passes = integer(1);
    else if (key == "svm_max_samples") c.svm.max_samples = size(2);
    else if (key == "feature_window") c.feature_window = integer(1);
    else if (key == "ma_short") c.indicators.ma_short = integer(2);
    else if (key == "ma_long") c.indicators.ma_long = integer(2);
    else if (key == "macd_fast") c.indicators.macd_fast = integer(2);
    else if (key == "macd_slow") c.indicators.macd_slow = integer(2);
    else if (key == "macd_signal") c.indicators.macd_signal = integer(2);
    else if (key == "bb_window") c.indicators.bb_window = integer(2);
    else if (key == "bb_k") c.indicators.bb_k = config_double(key, v);
    else if (key == "match_window") c.match_window = size(0);
    else if (key == "output_dir") c.output_dir = v;
    else if (key == "workers") c.workers = static_cast<unsigned>(config_int(key, v, 0));
    else throw ConfigError("unknown config key '" + key + "'");
}

// Declarative config file: key = value lines, '#' starts a comment line.
// Settings not mentioned keep the values already in `base`.
inline ExperimentConfig parse_config_text(std::string_view text, ExperimentConfig base = {}) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        apply_config_entry(base, std::string(trim(line.substr(0, eq))), line.substr(eq + 1));
    }
    return base;
}

inline std::string config_fingerprint(const ExperimentConfig& c) {
    Fnv1a h;
    h.update(canonical_config(c));
    return h.hex();
}

inline std::string data_fingerprint(const PriceSeries& s) {
    Fnv1a h;
    for (const auto& t : s.timestamps()) h.update(t);
    h.update(s.prices());
    return h.hex();
}

inline IngestResult load_series(const ExperimentConfig& c) {
    if (c.data_path.empty()) throw ConfigError("no data file given");
    IngestOptions opts;
    opts.schema = c.schema;
    opts.skip_bad_rows = c.skip_bad_rows;
    return ingest_csv(c.data_path, opts);
}

inline std::vector<double> resolve_tau_grid(const ExperimentConfig& c, const ReturnSeries& original_returns) {
    if (!c.tau_grid.empty()) return c.tau_grid;
    return default_tau_grid(original_returns, c.tau_points, c.tau_quantile);
}

inline std::size_t sample_split_index(std::size_t samples, double split) {
    return static_cast<std::size_t>(std::floor(split * static_cast<double>(samples)));
}

// Naive labels on `prices` -> windowed features -> SVM on the first `split`
// of samples (chronological) -> F1 on the rest.
inline WorkflowOutcome evaluate_downstream(std::span<const double> prices, const ReturnSeries& returns, double tau,
                                           LabelSource source, const ExperimentConfig& config) {
    WorkflowOutcome out;
    LabelSeries labels = naive_label(returns, tau, source);
    out.counts = count_classes(labels);
    SampleSet samples = featurize(prices, labels, config.feature_window);
    const std::size_t cut = sample_split_index(samples.size(), config.split);
    if (cut < 1 || cut >= samples.size())
        throw SeriesTooShort("split leaves an empty train or test set (" + std::to_string(samples.size()) +
                             " samples)");
    SampleSet train_set = samples.subset(0, cut);
    SampleSet test_set = samples.subset(cut, samples.size());
    out.train_samples = train_set.size();
    out.test_samples = test_set.size();
    SvmModel model = train_svm(train_set, config.svm);
    out.degenerate = model.single_class;
    out.warnings = model.warnings;
    out.f1 = f1_scores(predict(model, test_set.features), test_set.targets);
    return out;
}

namespace detail {

// Runs job(i) for i in [0, count) on up to `workers` threads. Results are
// written by index, so output does not depend on scheduling.
template <class Job>
void parallel_for(std::size_t count, unsigned workers, Job job) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

struct Workflow1Result {
    std::vector<double> taus;
    std::vector<WorkflowOutcome> outcomes;
};

inline Workflow1Result run_workflow1(const ExperimentConfig& config, const PriceSeries& series) {
    config.validate();
    const ReturnSeries returns = log_returns(series);
    Workflow1Result r;
    r.taus = resolve_tau_grid(config, returns);
    r.outcomes.resize(r.taus.size());
    detail::parallel_for(r.taus.size(), config.workers, [&](std::size_t i) {
        r.outcomes[i] = evaluate_downstream(series.prices(), returns, r.taus[i], LabelSource::original, config);
    });
    return r;
}

struct PretextResult {
    DenoisedSeries denoised;
    DenoiseDiagnostics diagnostics;
    AutoencoderModel model;
    FeatureMatrices features;
};

// Pretext task: build D and the noisy input, train the autoencoder and
// collapse its output to X'. In train_segment_only mode the scaler and the
// training columns stop at the split boundary.
inline PretextResult run_pretext(const ExperimentConfig& config, const PriceSeries& series) {
    const std::size_t n = series.size();
    const std::size_t fit_end = config.leakage == LeakageMode::full_series
                                    ? n
                                    : static_cast<std::size_t>(std::floor(config.split * static_cast<double>(n)));
    if (fit_end < static_cast<std::size_t>(config.lk) || fit_end < 2)
        throw SeriesTooShort("training segment of " + std::to_string(fit_end) + " prices is shorter than lk = " +
                             std::to_string(config.lk));
    PretextResult out;
    const ScalerParams scaler = fit_scaler(series.prices(), 0, fit_end);
    out.features = build_feature_matrices(series.prices(), config.l2, config.lk, scaler, config.structure);

    Architecture arch = config.architecture;
    arch.channels = out.features.pure.rows();
    AutoencoderModel initial = make_autoencoder(arch, config.seed, config.train);
    out.model = fit_end == n ? train(initial, out.features.noisy, out.features.pure)
                             : train(initial, out.features.noisy.slice_cols(0, fit_end),
                                     out.features.pure.slice_cols(0, fit_end));
    out.denoised = reconstruct(out.model, out.features.noisy, scaler);

    auto& d = out.diagnostics;
    d.loss_history = out.model.loss_history;
    d.loss_flags = loss_increase_flags(d.loss_history);
    d.initial_loss = d.loss_history.empty() ? out.model.final_loss : d.loss_history.front();
    d.final_loss = out.model.final_loss;
    d.epochs_run = out.model.loss_history.size();
    d.early_stopped = out.model.early_stopped;
    d.max_channel_spread = out.denoised.max_channel_spread;
    d.tv_original = total_variation(series.prices());
    d.tv_denoised = total_variation(out.denoised.prices);
    d.tv_ratio = d.tv_original > 0.0 ? d.tv_denoised / d.tv_original : 0.0;
    d.model_fingerprint = out.denoised.model_fingerprint;
    d.fit_end = fit_end;
    d.leaking = config.leakage == LeakageMode::full_series;
    return out;
}

struct Workflow2Result {
    std::vector<double> taus;
    std::vector<WorkflowOutcome> outcomes;
    PretextResult pretext;
};

// tau grid comes from the original returns so both workflows share it.
inline Workflow2Result run_workflow2(const ExperimentConfig& config, const PriceSeries& series) {
    config.validate();
    Workflow2Result r;
    r.taus = resolve_tau_grid(config, log_returns(series));
    r.pretext = run_pretext(config, series);
    const auto& denoised = r.pretext.denoised.prices;
    const ReturnSeries returns = log_returns(denoised);
    r.outcomes.resize(r.taus.size());
    detail::parallel_for(r.taus.size(), config.workers, [&](std::size_t i) {
        r.outcomes[i] = evaluate_downstream(denoised, returns, r.taus[i], LabelSource::denoised, config);
    });
    return r;
}

inline std::vector<IndicatorComparison> compare_indicators(const PriceSeries& series,
                                                           std::span<const double> denoised,
                                                           const IndicatorParams& params, std::size_t match_window,
                                                           std::vector<std::string>& warnings) {
    std::vector<IndicatorComparison> out;
    for (auto kind : {IndicatorKind::ma_cross, IndicatorKind::macd, IndicatorKind::bb}) {
        try {
            IndicatorComparison c;
            c.indicator = kind;
            c.original = indicator_buys(kind, series.prices(), params);
            c.denoised = indicator_buys(kind, denoised, params);
            annotate_signals(c.original, series.timestamps());
            annotate_signals(c.denoised, series.timestamps(), series.prices());
            c.diff = diff_signals(c.original, c.denoised, match_window);
            out.push_back(std::move(c));
        } catch (const UsageError& e) {
            warnings.push_back(std::string(to_string(kind)) + " skipped: " + e.what());
        } catch (const SeriesTooShort& e) {
            warnings.push_back(std::string(to_string(kind)) + " skipped: " + e.what());
        }
    }
    return out;
}

// Both workflows, class counts, indicator comparison and diagnostics.
inline ExperimentReport run_experiment(const ExperimentConfig& config, const PriceSeries& series) {
    config.validate();
    ExperimentReport report;
    report.config_fingerprint = config_fingerprint(config);
    report.data_fingerprint = data_fingerprint(series);
    report.seed = config.seed;
    report.config_text = canonical_config(config);
    report.n = series.size();

    Workflow1Result w1 = run_workflow1(config, series);
    Workflow2Result w2 = run_workflow2(config, series);
    for (std::size_t i = 0; i < w1.taus.size(); ++i)
        report.per_tau.push_back({w1.taus[i], w1.outcomes[i], w2.outcomes[i]});
    if (!w1.outcomes.empty())
        report.sample_split = w1.outcomes.front().train_samples;

    report.denoise = w2.pretext.diagnostics;
    if (report.denoise.leaking)
        report.warnings.push_back("leakage mode full_series: the autoencoder and scaler saw test-period prices");
    if (!report.denoise.loss_flags.empty())
        report.warnings.push_back(std::to_string(report.denoise.loss_flags.size()) +
                                  " training epochs raised the loss by more than 5% (first at epoch " +
                                  std::to_string(report.denoise.loss_flags.front()) + ")");
    report.timestamps = series.timestamps();
    report.original_prices.assign(series.prices().begin(), series.prices().end());
    report.denoised_prices = w2.pretext.denoised.prices;
    report.indicators =
        compare_indicators(series, report.denoised_prices, config.indicators, config.match_window, report.warnings);
    return report;
}

// Headline comparison of the two workflows over the tau grid. The relative
// improvement skips tau values where Workflow 1 scores exactly zero.
struct ContrastSummary {
    std::size_t taus = 0;
    std::size_t workflow2_not_worse = 0;
    double mean_relative_improvement = 0.0;
    std::size_t improvement_terms = 0;
};

inline ContrastSummary contrast_summary(const ExperimentReport& report) {
    ContrastSummary s;
    double acc = 0.0;
    for (const auto& r : report.per_tau) {
        ++s.taus;
        const double a = r.workflow1.f1.macro_f1, b = r.workflow2.f1.macro_f1;
        if (b >= a) ++s.workflow2_not_worse;
        if (a > 0.0) {
            acc += (b - a) / a;
            ++s.improvement_terms;
        }
    }
    if (s.improvement_terms) s.mean_relative_improvement = acc / static_cast<double>(s.improvement_terms);
    return s;
}

}  // namespace denolab
