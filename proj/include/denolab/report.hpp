#pragma once

#include "denolab/error.hpp"
#include "denolab/experiment.hpp"
#include "denolab/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace denolab {

using Json = nlohmann::ordered_json;

inline constexpr int kReportFormatVersion = 1;

namespace detail {

// JSON has no NaN or infinity; those become null and read back as NaN.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double number_from(const Json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline Json numbers(std::span<const double> v) {
    Json a = Json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

inline std::vector<double> numbers_from(const Json& j) {
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& x : j) out.push_back(number_from(x));
    return out;
}

inline Json to_json(const ClassCounts& c) {
    return {{"count_up", c.count_up}, {"count_down", c.count_down}, {"count_none", c.count_none}};
}

inline ClassCounts counts_from(const Json& j, double tau) {
    return {tau, j.at("count_up").get<std::size_t>(), j.at("count_down").get<std::size_t>(),
            j.at("count_none").get<std::size_t>()};
}

inline Json to_json(const F1Result& f) {
    Json per = Json::array();
    for (const auto& s : f.per_class)
        per.push_back({{"label", s.label},
                       {"precision", number(s.precision)},
                       {"recall", number(s.recall)},
                       {"f1", number(s.f1)},
                       {"support", s.support},
                       {"predicted", s.predicted}});
    return {{"macro_f1", number(f.macro_f1)},
            {"weighted_f1", number(f.weighted_f1)},
            {"per_class", per},
            {"confusion", f.confusion},
            {"excluded", f.excluded}};
}

inline F1Result f1_from(const Json& j) {
    F1Result f;
    f.macro_f1 = number_from(j.at("macro_f1"));
    f.weighted_f1 = number_from(j.at("weighted_f1"));
    const auto& per = j.at("per_class");
    if (per.size() != 3) throw IoError("report: per_class must have 3 entries");
    for (std::size_t c = 0; c < 3; ++c) {
        auto& s = f.per_class[c];
        s.label = per[c].at("label").get<int>();
        s.precision = number_from(per[c].at("precision"));
        s.recall = number_from(per[c].at("recall"));
        s.f1 = number_from(per[c].at("f1"));
        s.support = per[c].at("support").get<std::size_t>();
        s.predicted = per[c].at("predicted").get<std::size_t>();
    }
    f.confusion = j.at("confusion").get<std::array<std::array<std::size_t, 3>, 3>>();
    f.excluded = j.at("excluded").get<std::vector<int>>();
    return f;
}

inline Json to_json(const WorkflowOutcome& w) {
    return {{"f1", to_json(w.f1)},
            {"class_counts", to_json(w.counts)},
            {"train_samples", w.train_samples},
            {"test_samples", w.test_samples},
            {"degenerate", w.degenerate},
            {"warnings", w.warnings}};
}

inline WorkflowOutcome outcome_from(const Json& j, double tau) {
    WorkflowOutcome w;
    w.f1 = f1_from(j.at("f1"));
    w.counts = counts_from(j.at("class_counts"), tau);
    w.train_samples = j.at("train_samples").get<std::size_t>();
    w.test_samples = j.at("test_samples").get<std::size_t>();
    w.degenerate = j.at("degenerate").get<bool>();
    w.warnings = j.at("warnings").get<std::vector<std::string>>();
    return w;
}

inline Json to_json(const BuySignal& s) {
    return {{"index", s.index}, {"timestamp", s.timestamp}, {"price", number(s.price)}};
}

inline BuySignal signal_from(const Json& j, IndicatorKind kind) {
    return {j.at("index").get<std::size_t>(), j.at("timestamp").get<std::string>(), number_from(j.at("price")), kind};
}

inline Json signals(std::span<const BuySignal> v) {
    Json a = Json::array();
    for (const auto& s : v) a.push_back(to_json(s));
    return a;
}

inline std::vector<BuySignal> signals_from(const Json& j, IndicatorKind kind) {
    std::vector<BuySignal> out;
    for (const auto& s : j) out.push_back(signal_from(s, kind));
    return out;
}

inline PriceComparison parse_comparison(const std::string& s) {
    if (s == "lower") return PriceComparison::lower;
    if (s == "higher") return PriceComparison::higher;
    if (s == "equal") return PriceComparison::equal;
    throw IoError("report: unknown price comparison '" + s + "'");
}

inline Json to_json(const IndicatorComparison& c) {
    Json pairs = Json::array();
    for (const auto& p : c.diff.pairs)
        pairs.push_back({{"original", to_json(p.original)},
                         {"denoised", to_json(p.denoised)},
                         {"price_delta", number(p.price_delta)},
                         {"comparison", to_string(p.comparison)}});
    return {{"indicator", to_string(c.indicator)},
            {"original", signals(c.original)},
            {"denoised", signals(c.denoised)},
            {"diff",
             {{"pairs", pairs},
              {"unmatched_original", signals(c.diff.unmatched_original)},
              {"unmatched_denoised", signals(c.diff.unmatched_denoised)},
              {"count_lower", c.diff.count_lower()}}}};
}

inline IndicatorComparison comparison_from(const Json& j) {
    IndicatorComparison c;
    c.indicator = parse_indicator(j.at("indicator").get<std::string>());
    c.original = signals_from(j.at("original"), c.indicator);
    c.denoised = signals_from(j.at("denoised"), c.indicator);
    const auto& d = j.at("diff");
    for (const auto& p : d.at("pairs"))
        c.diff.pairs.push_back({signal_from(p.at("original"), c.indicator),
                                signal_from(p.at("denoised"), c.indicator), number_from(p.at("price_delta")),
                                parse_comparison(p.at("comparison").get<std::string>())});
    c.diff.unmatched_original = signals_from(d.at("unmatched_original"), c.indicator);
    c.diff.unmatched_denoised = signals_from(d.at("unmatched_denoised"), c.indicator);
    return c;
}

inline Json to_json(const DenoiseDiagnostics& d) {
    return {{"initial_loss", number(d.initial_loss)},
            {"final_loss", number(d.final_loss)},
            {"epochs_run", d.epochs_run},
            {"early_stopped", d.early_stopped},
            {"max_channel_spread", number(d.max_channel_spread)},
            {"tv_original", number(d.tv_original)},
            {"tv_denoised", number(d.tv_denoised)},
            {"tv_ratio", number(d.tv_ratio)},
            {"model_fingerprint", d.model_fingerprint},
            {"fit_end", d.fit_end},
            {"leaking", d.leaking},
            {"loss_flags", d.loss_flags},
            {"loss_history", numbers(d.loss_history)}};
}

inline DenoiseDiagnostics diagnostics_from(const Json& j) {
    DenoiseDiagnostics d;
    d.initial_loss = number_from(j.at("initial_loss"));
    d.final_loss = number_from(j.at("final_loss"));
    d.epochs_run = j.at("epochs_run").get<std::size_t>();
    d.early_stopped = j.at("early_stopped").get<bool>();
    d.max_channel_spread = number_from(j.at("max_channel_spread"));
    d.tv_original = number_from(j.at("tv_original"));
    d.tv_denoised = number_from(j.at("tv_denoised"));
    d.tv_ratio = number_from(j.at("tv_ratio"));
    d.model_fingerprint = j.at("model_fingerprint").get<std::string>();
    d.fit_end = j.at("fit_end").get<std::size_t>();
    d.leaking = j.at("leaking").get<bool>();
    d.loss_flags = j.at("loss_flags").get<std::vector<std::size_t>>();
    d.loss_history = numbers_from(j.at("loss_history"));
    return d;
}

}  // namespace detail

inline Json report_to_json(const ExperimentReport& r) {
    Json per = Json::array();
    for (const auto& t : r.per_tau)
        per.push_back({{"tau", detail::number(t.tau)},
                       {"workflow1", detail::to_json(t.workflow1)},
                       {"workflow2", detail::to_json(t.workflow2)}});
    Json ind = Json::array();
    for (const auto& c : r.indicators) ind.push_back(detail::to_json(c));
    return {{"format", "denolab-report"},
            {"version", kReportFormatVersion},
            {"config_fingerprint", r.config_fingerprint},
            {"data_fingerprint", r.data_fingerprint},
            {"seed", r.seed},
            {"config", r.config_text},
            {"n", r.n},
            {"sample_split", r.sample_split},
            {"per_tau", per},
            {"denoise", detail::to_json(r.denoise)},
            {"indicators", ind},
            {"series",
             {{"timestamps", r.timestamps},
              {"original", detail::numbers(r.original_prices)},
              {"denoised", detail::numbers(r.denoised_prices)}}},
            {"warnings", r.warnings}};
}

inline ExperimentReport report_from_json(const Json& j) {
    try {
        if (j.at("format").get<std::string>() != "denolab-report") throw IoError("not a denolab report");
        if (j.at("version").get<int>() != kReportFormatVersion)
            throw IoError("unsupported report version " + j.at("version").dump());
        ExperimentReport r;
        r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        r.data_fingerprint = j.at("data_fingerprint").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.config_text = j.at("config").get<std::string>();
        r.n = j.at("n").get<std::size_t>();
        r.sample_split = j.at("sample_split").get<std::size_t>();
        for (const auto& t : j.at("per_tau")) {
            const double tau = detail::number_from(t.at("tau"));
            r.per_tau.push_back(
                {tau, detail::outcome_from(t.at("workflow1"), tau), detail::outcome_from(t.at("workflow2"), tau)});
        }
        r.denoise = detail::diagnostics_from(j.at("denoise"));
        for (const auto& c : j.at("indicators")) r.indicators.push_back(detail::comparison_from(c));
        const auto& s = j.at("series");
        r.timestamps = s.at("timestamps").get<std::vector<std::string>>();
        r.original_prices = detail::numbers_from(s.at("original"));
        r.denoised_prices = detail::numbers_from(s.at("denoised"));
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed report: ") + e.what());
    }
}

inline std::string report_json_text(const ExperimentReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline ExperimentReport parse_report(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("report is not valid JSON: ") + e.what());
    }
    return report_from_json(j);
}

inline ExperimentReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound(path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_report(buf.str());
}

// ---- tables -------------------------------------------------------------

inline void write_f1_csv(std::ostream& out, const ExperimentReport& r) {
    out << "tau,workflow,macro_f1,weighted_f1,f1_down,f1_none,f1_up,support_down,support_none,support_up,"
           "degenerate\n";
    for (const auto& t : r.per_tau) {
        int k = 1;
        for (const auto* w : {&t.workflow1, &t.workflow2}) {
            out << format_double(t.tau) << ',' << k++ << ',' << format_double(w->f1.macro_f1) << ','
                << format_double(w->f1.weighted_f1);
            for (const auto& s : w->f1.per_class) out << ',' << format_double(s.f1);
            for (const auto& s : w->f1.per_class) out << ',' << s.support;
            out << ',' << (w->degenerate ? "true" : "false") << '\n';
        }
    }
}

inline void write_report_class_counts_csv(std::ostream& out, const ExperimentReport& r) {
    out << "tau,source,count_up,count_down,count_none\n";
    for (const auto& t : r.per_tau) {
        for (const auto& [name, w] : {std::pair{"original", &t.workflow1}, std::pair{"denoised", &t.workflow2}})
            out << format_double(t.tau) << ',' << name << ',' << w->counts.count_up << ',' << w->counts.count_down
                << ',' << w->counts.count_none << '\n';
    }
}

inline void write_report_signals_csv(std::ostream& out, const ExperimentReport& r) {
    out << "series,indicator,timestamp,index,price\n";
    for (const auto& c : r.indicators) {
        for (const auto& [name, list] :
             {std::pair{"original", &c.original}, std::pair{"denoised", &c.denoised}})
            for (const auto& s : *list)
                out << name << ',' << to_string(c.indicator) << ',' << s.timestamp << ',' << s.index << ','
                    << format_double(s.price) << '\n';
    }
}

inline void write_loss_history_csv(std::ostream& out, const DenoiseDiagnostics& d) {
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < d.loss_history.size(); ++e) out << e << ',' << format_double(d.loss_history[e]) << '\n';
}

// ---- SVG ----------------------------------------------------------------

struct PlotSeries {
    std::string name;
    std::string color;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Comments may not contain "--".
inline std::string comment_safe(std::string s) {
    for (std::size_t p; (p = s.find("--")) != std::string::npos;) s.replace(p, 2, "- -");
    return s;
}

inline std::pair<double, double> padded_range(double lo, double hi) {
    if (!(hi > lo)) {
        const double pad = std::abs(lo) > 0.0 ? std::abs(lo) * 0.05 : 1.0;
        return {lo - pad, hi + pad};
    }
    const double pad = (hi - lo) * 0.04;
    return {lo - pad, hi + pad};
}

}  // namespace detail

// Line chart with axes, tick labels, legend and the plotted data repeated in
// a comment block. One polyline per series.
inline std::string render_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                                     const std::vector<PlotSeries>& series, std::vector<std::string> x_tick_text = {}) {
    const double width = 800, height = 480, left = 70, right = 20, top = 40, bottom = 60;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    std::tie(xmin, xmax) = detail::padded_range(xmin, xmax);
    std::tie(ymin, ymax) = detail::padded_range(ymin, ymax);
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    o << "<!-- data\n";
    for (const auto& s : series) {
        o << detail::comment_safe(s.name) << "\nx,y\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << format_double(s.x[i]) << ',' << format_double(s.y[i]) << '\n';
    }
    o << "-->\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << detail::xml_escape(title) << "</text>\n";
    o << "<g stroke=\"black\" stroke-width=\"1\">\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\"/>\n";
    o << "</g>\n";
    o << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 5.0, yv = ymin + (ymax - ymin) * k / 5.0;
        std::string xt = x_tick_text.empty() ? format_fixed(xv, std::abs(xmax - xmin) < 1 ? 4 : 1) : "";
        if (!x_tick_text.empty()) {
            const auto idx = static_cast<std::size_t>(std::clamp(std::round(xv), 0.0, double(x_tick_text.size() - 1)));
            xt = x_tick_text[idx];
        }
        o << "<text x=\"" << format_fixed(px(xv), 1) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
          << detail::xml_escape(xt) << "</text>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << format_fixed(py(yv) + 4, 1) << "\" text-anchor=\"end\">"
          << format_fixed(yv, std::abs(ymax - ymin) < 1 ? 3 : 1) << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 14 << "\" text-anchor=\"middle\">"
      << detail::xml_escape(x_label) << "</text>\n";
    o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << top + ph / 2 << ")\">" << detail::xml_escape(y_label) << "</text>\n";
    o << "</g>\n";

    for (const auto& s : series) {
        o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
          << (s.dashed ? " stroke-dasharray=\"6 3\"" : "") << " points=\"";
        bool first = true;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            o << (first ? "" : " ") << format_fixed(px(s.x[i]), 2) << ',' << format_fixed(py(s.y[i]), 2);
            first = false;
        }
        o << "\"><title>" << detail::xml_escape(s.name) << "</title></polyline>\n";
    }
    o << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double ly = top + 10 + 16.0 * static_cast<double>(i);
        o << "<rect x=\"" << left + 10 << "\" y=\"" << ly - 8 << "\" width=\"14\" height=\"3\" fill=\""
          << series[i].color << "\"/>\n";
        o << "<text x=\"" << left + 30 << "\" y=\"" << ly << "\">" << detail::xml_escape(series[i].name)
          << "</text>\n";
    }
    o << "</g>\n</svg>\n";
    return o.str();
}

inline std::string f1_vs_tau_svg(const ExperimentReport& r) {
    PlotSeries a{"Workflow 1 (original)", "#1f77b4", {}, {}}, b{"Workflow 2 (denoised)", "#d62728", {}, {}};
    for (const auto& t : r.per_tau) {
        a.x.push_back(t.tau);
        a.y.push_back(t.workflow1.f1.macro_f1);
        b.x.push_back(t.tau);
        b.y.push_back(t.workflow2.f1.macro_f1);
    }
    return render_line_chart("Macro F1 vs tau", "tau", "macro F1", {a, b});
}

inline std::string class_counts_vs_tau_svg(const ExperimentReport& r) {
    std::vector<PlotSeries> s{{"up, original", "#2ca02c", {}, {}},   {"down, original", "#d62728", {}, {}},
                              {"none, original", "#7f7f7f", {}, {}}, {"up, denoised", "#2ca02c", {}, {}, true},
                              {"down, denoised", "#d62728", {}, {}, true}, {"none, denoised", "#7f7f7f", {}, {}, true}};
    for (const auto& t : r.per_tau) {
        const ClassCounts* c[2] = {&t.workflow1.counts, &t.workflow2.counts};
        for (int k = 0; k < 2; ++k) {
            const double v[3] = {double(c[k]->count_up), double(c[k]->count_down), double(c[k]->count_none)};
            for (int j = 0; j < 3; ++j) {
                s[3 * k + j].x.push_back(t.tau);
                s[3 * k + j].y.push_back(v[j]);
            }
        }
    }
    return render_line_chart("Class counts vs tau", "tau", "samples", s);
}

// Evenly strided indices, at most max_points, always including the last.
inline std::vector<std::size_t> downsample_indices(std::size_t n, std::size_t max_points = 2000) {
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    if (n <= max_points) {
        for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
        return idx;
    }
    for (std::size_t k = 0; k < max_points; ++k) idx.push_back(k * (n - 1) / (max_points - 1));
    return idx;
}

inline std::string price_overlay_svg(const ExperimentReport& r) {
    PlotSeries a{"original", "#1f77b4", {}, {}}, b{"denoised", "#d62728", {}, {}};
    const std::size_t n = std::min(r.original_prices.size(), r.denoised_prices.size());
    for (auto i : downsample_indices(n)) {
        a.x.push_back(double(i));
        a.y.push_back(r.original_prices[i]);
        b.x.push_back(double(i));
        b.y.push_back(r.denoised_prices[i]);
    }
    return render_line_chart("Original vs denoised close", "time", "price", {a, b}, r.timestamps);
}

// ---- markdown -----------------------------------------------------------

inline std::string summary_markdown(const ExperimentReport& r) {
    std::ostringstream o;
    const auto cs = contrast_summary(r);
    o << "# Contrastive experiment\n\n";
    o << "- samples: " << r.n << " prices\n";
    o << "- seed: " << r.seed << "\n";
    o << "- config fingerprint: `" << r.config_fingerprint << "`\n";
    o << "- data fingerprint: `" << r.data_fingerprint << "`\n";
    o << "- Workflow 2 macro-F1 >= Workflow 1 at " << cs.workflow2_not_worse << " of " << cs.taus << " tau values\n";
    o << "- mean relative macro-F1 change: " << format_fixed(100.0 * cs.mean_relative_improvement, 2) << "% over "
      << cs.improvement_terms << " tau values\n\n";

    o << "## Denoising\n\n";
    const auto& d = r.denoise;
    o << "| metric | value |\n|---|---|\n";
    o << "| initial loss | " << format_double(d.initial_loss) << " |\n";
    o << "| final loss | " << format_double(d.final_loss) << " |\n";
    o << "| epochs | " << d.epochs_run << (d.early_stopped ? " (early stop)" : "") << " |\n";
    o << "| epochs with >5% loss increase | " << d.loss_flags.size() << " |\n";
    o << "| max channel spread | " << format_fixed(d.max_channel_spread, 6) << " |\n";
    o << "| TV original | " << format_fixed(d.tv_original, 4) << " |\n";
    o << "| TV denoised | " << format_fixed(d.tv_denoised, 4) << " |\n";
    o << "| TV ratio | " << format_fixed(d.tv_ratio, 4) << " |\n";
    o << "| training columns | " << d.fit_end << (d.leaking ? " (full series, leaking)" : "") << " |\n\n";

    o << "## F1 vs tau\n\n";
    o << "| tau | W1 macro-F1 | W2 macro-F1 | W1 none | W2 none | notes |\n|---|---|---|---|---|---|\n";
    for (const auto& t : r.per_tau) {
        std::string notes;
        if (t.workflow1.degenerate) notes += "W1 single class; ";
        if (t.workflow2.degenerate) notes += "W2 single class; ";
        if (!notes.empty()) notes.resize(notes.size() - 2);
        o << "| " << format_fixed(t.tau, 6) << " | " << format_fixed(t.workflow1.f1.macro_f1, 4) << " | "
          << format_fixed(t.workflow2.f1.macro_f1, 4) << " | " << t.workflow1.counts.count_none << " | "
          << t.workflow2.counts.count_none << " | " << notes << " |\n";
    }
    o << "\n## Buy signals\n\n";
    for (const auto& c : r.indicators) {
        write_diff_markdown(o, c.diff, to_string(c.indicator));
        o << '\n';
    }
    if (!r.warnings.empty()) {
        o << "## Warnings\n\n";
        for (const auto& w : r.warnings) o << "- " << w << '\n';
    }
    return o.str();
}

// ---- emission -----------------------------------------------------------

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

// Writes every report artifact into outdir and returns the file names in
// the order written.
inline std::vector<std::string> emit_report(const ExperimentReport& r, const std::filesystem::path& outdir) {
    std::error_code ec;
    std::filesystem::create_directories(outdir, ec);
    if (ec) throw IoError("cannot create " + outdir.string() + ": " + ec.message());
    std::vector<std::string> names;
    auto put = [&](const std::string& name, const std::string& text) {
        write_text_file(outdir / name, text);
        names.push_back(name);
    };
    auto table = [](auto writer) {
        std::ostringstream o;
        writer(o);
        return o.str();
    };
    put("report.json", report_json_text(r));
    put("f1_vs_tau.csv", table([&](std::ostream& o) { write_f1_csv(o, r); }));
    put("class_counts_vs_tau.csv", table([&](std::ostream& o) { write_report_class_counts_csv(o, r); }));
    put("signals.csv", table([&](std::ostream& o) { write_report_signals_csv(o, r); }));
    put("signal_diffs.csv", table([&](std::ostream& o) {
            bool header = true;
            if (r.indicators.empty()) write_diff_csv(o, SignalDiff{}, "", true);
            for (const auto& c : r.indicators) {
                write_diff_csv(o, c.diff, to_string(c.indicator), header);
                header = false;
            }
        }));
    put("signal_diffs.md", table([&](std::ostream& o) {
            for (const auto& c : r.indicators) {
                write_diff_markdown(o, c.diff, to_string(c.indicator));
                o << '\n';
            }
        }));
    put("loss_history.csv", table([&](std::ostream& o) { write_loss_history_csv(o, r.denoise); }));
    put("f1_vs_tau.svg", f1_vs_tau_svg(r));
    put("class_counts_vs_tau.svg", class_counts_vs_tau_svg(r));
    put("price_overlay.svg", price_overlay_svg(r));
    put("summary.md", summary_markdown(r));
    return names;
}

}  // namespace denolab
