#pragma once

#include "denolab/binary_io.hpp"
#include "denolab/error.hpp"
#include "denolab/labeling.hpp"
#include "denolab/market_data.hpp"
#include "denolab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <list>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace denolab {

struct SvmConfig {
    double C = 1.0;
    std::optional<double> fixed_gamma;  // nullopt: 1 / (d * Var(features))
    double kkt_tolerance = 1e-3;
    int max_passes = 1000;               // iteration cap is max_passes * samples
    std::size_t max_samples = 20000;     // stratified subsample above this
    std::uint64_t subsample_seed = 0;

    void validate() const {
        if (!(C > 0.0)) throw ConfigError("SVM C must be > 0");
        if (fixed_gamma && !(*fixed_gamma > 0.0)) throw ConfigError("SVM gamma must be > 0");
        if (!(kkt_tolerance > 0.0)) throw ConfigError("KKT tolerance must be > 0");
        if (max_passes < 1) throw ConfigError("max_passes must be >= 1");
        if (max_samples < 2) throw ConfigError("max_samples must be >= 2");
    }

    bool operator==(const SvmConfig&) const = default;
};

// Rows of `features` are samples. target_index[i] is the return index whose
// label is targets[i].
struct SampleSet {
    Matrix features;
    std::vector<int> targets;
    std::vector<std::size_t> target_index;
    int window = 1;

    std::size_t size() const noexcept { return targets.size(); }
    std::size_t dimension() const noexcept { return features.cols(); }

    SampleSet subset(std::size_t begin, std::size_t end) const {
        SampleSet s;
        s.window = window;
        s.features = Matrix(end - begin, features.cols());
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t c = 0; c < features.cols(); ++c) s.features(i - begin, c) = features(i, c);
        s.targets.assign(targets.begin() + static_cast<std::ptrdiff_t>(begin),
                         targets.begin() + static_cast<std::ptrdiff_t>(end));
        s.target_index.assign(target_index.begin() + static_cast<std::ptrdiff_t>(begin),
                              target_index.begin() + static_cast<std::ptrdiff_t>(end));
        return s;
    }
};

// Sliding windows of `window` log returns ending at return index t, each
// paired with the label of return t + 1. Incomplete windows are dropped.
inline SampleSet featurize(std::span<const double> prices, const LabelSeries& labels, int window) {
    if (window < 1) throw WindowOutOfRange("feature window must be >= 1");
    if (prices.size() < 2 || labels.size() + 1 != prices.size())
        throw ShapeMismatch("labels must have one entry per return (n - 1)");
    const ReturnSeries r = log_returns(prices);
    const auto w = static_cast<std::size_t>(window);
    if (r.size() < w + 1)
        throw SeriesTooShort(std::to_string(prices.size()) + " prices cannot fill a window of " +
                             std::to_string(window) + " plus one target");
    const std::size_t m = r.size() - w;
    SampleSet s;
    s.window = window;
    s.features = Matrix(m, w);
    s.targets.resize(m);
    s.target_index.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t t = i + w - 1;
        for (std::size_t j = 0; j < w; ++j) s.features(i, j) = r.values[t + 1 - w + j];
        s.targets[i] = labels.labels[t + 1];
        s.target_index[i] = t + 1;
    }
    return s;
}

inline double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma) {
    if (u.size() != v.size()) throw DimensionMismatch("kernel operands have different lengths");
    double d2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

// 1 / (d * variance of all feature entries); 1 when the variance is zero.
inline double scale_gamma(const Matrix& features) {
    const auto n = static_cast<double>(features.size());
    if (features.size() == 0) return 1.0;
    double mean = 0.0;
    for (double v : features.data()) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : features.data()) var += (v - mean) * (v - mean);
    var /= n;
    if (!(var > 0.0)) return 1.0;
    return 1.0 / (static_cast<double>(features.cols()) * var);
}

// Kernel rows computed on demand and kept in an LRU cache bounded by bytes.
class KernelRowCache {
public:
    KernelRowCache(const Matrix& x, double gamma, std::size_t budget_bytes = std::size_t{256} << 20)
        : x_(x), gamma_(gamma) {
        const std::size_t row_bytes = std::max<std::size_t>(1, x.rows() * sizeof(double));
        capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
    }

    const std::vector<double>& row(std::size_t i) {
        if (auto it = index_.find(i); it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return it->second->second;
        }
        if (lru_.size() >= capacity_) {
            index_.erase(lru_.back().first);
            lru_.pop_back();
        }
        std::vector<double> values(x_.rows());
        for (std::size_t j = 0; j < x_.rows(); ++j) values[j] = rbf_kernel(x_.row(i), x_.row(j), gamma_);
        lru_.emplace_front(i, std::move(values));
        index_[i] = lru_.begin();
        return lru_.front().second;
    }

private:
    const Matrix& x_;
    double gamma_;
    std::size_t capacity_;
    std::list<std::pair<std::size_t, std::vector<double>>> lru_;
    std::unordered_map<std::size_t, std::list<std::pair<std::size_t, std::vector<double>>>::iterator> index_;
};

struct BinarySmoResult {
    std::vector<double> alpha;
    double rho = 0.0;  // decision f(x) = sum_i alpha_i y_i K(x_i, x) - rho
    std::size_t iterations = 0;
    bool converged = false;
};

// Soft-margin dual solved by SMO with second-order working-set selection.
// Stops once the maximal KKT violation gap drops to `tolerance`, or after
// `max_iterations` pair updates (converged = false).
inline BinarySmoResult solve_binary_smo(const Matrix& x, std::span<const int> y, double C, double gamma,
                                        double tolerance, std::size_t max_iterations) {
    const std::size_t m = x.rows();
    if (y.size() != m) throw DimensionMismatch("targets and features differ in length");
    constexpr double tau = 1e-12;
    KernelRowCache kernel(x, gamma);
    std::vector<double> diag(m);
    for (std::size_t i = 0; i < m; ++i) diag[i] = rbf_kernel(x.row(i), x.row(i), gamma);

    BinarySmoResult res;
    res.alpha.assign(m, 0.0);
    std::vector<double> grad(m, -1.0);  // gradient of 1/2 a'Qa - e'a
    auto& alpha = res.alpha;
    auto upper = [&](std::size_t t) { return alpha[t] >= C; };
    auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

    while (res.iterations < max_iterations) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t i_sel = -1;
        for (std::size_t t = 0; t < m; ++t) {
            if (y[t] == 1) {
                if (!upper(t) && -grad[t] >= gmax) {
                    gmax = -grad[t];
                    i_sel = static_cast<std::ptrdiff_t>(t);
                }
            } else if (!lower(t) && grad[t] >= gmax) {
                gmax = grad[t];
                i_sel = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (i_sel < 0) {
            res.converged = true;
            break;
        }
        const auto i = static_cast<std::size_t>(i_sel);
        const std::vector<double>& ki = kernel.row(i);

        double gmax2 = -std::numeric_limits<double>::infinity();
        double best_obj = std::numeric_limits<double>::infinity();
        std::ptrdiff_t j_sel = -1;
        for (std::size_t t = 0; t < m; ++t) {
            double grad_diff = 0.0;
            if (y[t] == 1) {
                if (lower(t)) continue;
                gmax2 = std::max(gmax2, grad[t]);
                grad_diff = gmax + grad[t];
            } else {
                if (upper(t)) continue;
                gmax2 = std::max(gmax2, -grad[t]);
                grad_diff = gmax - grad[t];
            }
            if (grad_diff > 0.0) {
                const double quad = diag[i] + diag[t] - 2.0 * ki[t];
                const double obj = -(grad_diff * grad_diff) / (quad > 0.0 ? quad : tau);
                if (obj <= best_obj) {
                    best_obj = obj;
                    j_sel = static_cast<std::ptrdiff_t>(t);
                }
            }
        }
        if (gmax + gmax2 <= tolerance || j_sel < 0) {
            res.converged = true;
            break;
        }
        const auto j = static_cast<std::size_t>(j_sel);
        ++res.iterations;

        const double qij = y[i] * y[j] * ki[j];
        const double old_i = alpha[i];
        const double old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = diag[i] + diag[j] + 2.0 * qij;
            if (quad <= 0.0) quad = tau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else if (alpha[j] > C) {
                alpha[j] = C;
                alpha[i] = C + diff;
            }
        } else {
            double quad = diag[i] + diag[j] - 2.0 * qij;
            if (quad <= 0.0) quad = tau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        const double di = alpha[i] - old_i;
        const double dj = alpha[j] - old_j;
        // Row i is the most recently used entry, so fetching row j cannot evict it.
        const std::vector<double>& kj = kernel.row(j);
        for (std::size_t t = 0; t < m; ++t)
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
    }

    // Bias from free vectors, or the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < m; ++t) {
        const double yg = y[t] * grad[t];
        if (upper(t)) {
            if (y[t] == -1)
                ub = std::min(ub, yg);
            else
                lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (y[t] == 1)
                ub = std::min(ub, yg);
            else
                lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    res.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
    return res;
}

// One one-vs-one subproblem. Positive decision votes for positive_class.
struct BinaryModel {
    int positive_class = 0;
    int negative_class = 0;
    Matrix support_vectors;
    std::vector<double> coefficients;  // alpha_i * y_i
    double rho = 0.0;
    std::size_t iterations = 0;
    bool converged = true;

    double decision(std::span<const double> x, double gamma) const {
        double f = -rho;
        for (std::size_t s = 0; s < coefficients.size(); ++s)
            f += coefficients[s] * rbf_kernel(support_vectors.row(s), x, gamma);
        return f;
    }

    bool operator==(const BinaryModel&) const = default;
};

struct SvmModel {
    std::vector<int> classes;  // ascending
    std::vector<BinaryModel> binaries;
    double gamma = 1.0;
    std::size_t dimension = 0;
    bool single_class = false;  // constant classifier; classes has one entry
    std::vector<std::string> warnings;

    bool operator==(const SvmModel&) const = default;
};

namespace detail {

inline std::vector<std::size_t> stratified_subsample(std::span<const int> targets, std::size_t cap,
                                                     std::uint64_t seed) {
    std::vector<int> classes(targets.begin(), targets.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> keep;
    const double fraction = static_cast<double>(cap) / static_cast<double>(targets.size());
    for (int c : classes) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < targets.size(); ++i)
            if (targets[i] == c) members.push_back(i);
        auto take = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size()))));
        std::shuffle(members.begin(), members.end(), rng);
        keep.insert(keep.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

}  // namespace detail

inline SvmModel train_svm(const SampleSet& samples, const SvmConfig& config) {
    config.validate();
    if (samples.size() == 0) throw EmptyInput("no training samples");
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (double v : samples.features.row(i))
            if (!std::isfinite(v)) throw NonFiniteFeature(i);

    SvmModel model;
    model.dimension = samples.dimension();
    model.classes = samples.targets;
    std::sort(model.classes.begin(), model.classes.end());
    model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());

    const SampleSet* data = &samples;
    SampleSet reduced;
    if (samples.size() > config.max_samples) {
        auto keep = detail::stratified_subsample(samples.targets, config.max_samples, config.subsample_seed);
        reduced.window = samples.window;
        reduced.features = Matrix(keep.size(), samples.dimension());
        for (std::size_t k = 0; k < keep.size(); ++k) {
            for (std::size_t c = 0; c < samples.dimension(); ++c)
                reduced.features(k, c) = samples.features(keep[k], c);
            reduced.targets.push_back(samples.targets[keep[k]]);
            reduced.target_index.push_back(samples.target_index[keep[k]]);
        }
        model.warnings.push_back("subsampled " + std::to_string(samples.size()) + " training samples to " +
                                 std::to_string(keep.size()));
        data = &reduced;
    }
    model.gamma = config.fixed_gamma ? *config.fixed_gamma : scale_gamma(data->features);

    if (model.classes.size() == 1) {
        model.single_class = true;
        model.warnings.push_back("SingleClassData: all training samples are class " +
                                 std::to_string(model.classes.front()) + "; using a constant classifier");
        return model;
    }

    const std::size_t max_iter =
        static_cast<std::size_t>(config.max_passes) * std::max<std::size_t>(data->size(), 1);
    for (std::size_t a = 0; a < model.classes.size(); ++a) {
        for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < data->size(); ++i)
                if (data->targets[i] == model.classes[a] || data->targets[i] == model.classes[b]) idx.push_back(i);
            Matrix x(idx.size(), data->dimension());
            std::vector<int> y(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k) {
                for (std::size_t c = 0; c < data->dimension(); ++c) x(k, c) = data->features(idx[k], c);
                y[k] = data->targets[idx[k]] == model.classes[a] ? 1 : -1;
            }
            auto sol = solve_binary_smo(x, y, config.C, model.gamma, config.kkt_tolerance, max_iter);

            BinaryModel bm;
            bm.positive_class = model.classes[a];
            bm.negative_class = model.classes[b];
            bm.rho = sol.rho;
            bm.iterations = sol.iterations;
            bm.converged = sol.converged;
            std::size_t n_sv = 0;
            for (double al : sol.alpha) n_sv += al > 0.0 ? 1 : 0;
            bm.support_vectors = Matrix(n_sv, data->dimension());
            std::size_t s = 0;
            for (std::size_t k = 0; k < idx.size(); ++k) {
                if (!(sol.alpha[k] > 0.0)) continue;
                for (std::size_t c = 0; c < data->dimension(); ++c) bm.support_vectors(s, c) = x(k, c);
                bm.coefficients.push_back(sol.alpha[k] * y[k]);
                ++s;
            }
            if (!sol.converged)
                model.warnings.push_back("SMO hit the iteration cap for classes " + std::to_string(bm.positive_class) +
                                         "/" + std::to_string(bm.negative_class));
            model.binaries.push_back(std::move(bm));
        }
    }
    return model;
}

// One-vs-one majority vote; ties go to the smallest class label.
inline int predict_one(const SvmModel& model, std::span<const double> x) {
    if (x.size() != model.dimension)
        throw DimensionMismatch("expected " + std::to_string(model.dimension) + " features, got " +
                                std::to_string(x.size()));
    if (model.single_class || model.classes.size() == 1) return model.classes.front();
    std::vector<int> votes(model.classes.size(), 0);
    auto slot = [&](int label) {
        return static_cast<std::size_t>(std::lower_bound(model.classes.begin(), model.classes.end(), label) -
                                        model.classes.begin());
    };
    for (const auto& bm : model.binaries) {
        if (bm.decision(x, model.gamma) > 0.0)
            ++votes[slot(bm.positive_class)];
        else
            ++votes[slot(bm.negative_class)];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c)
        if (votes[c] > votes[best]) best = c;
    return model.classes[best];
}

inline std::vector<int> predict(const SvmModel& model, const Matrix& features) {
    if (features.rows() > 0 && features.cols() != model.dimension)
        throw DimensionMismatch("expected " + std::to_string(model.dimension) + " features, got " +
                                std::to_string(features.cols()));
    std::vector<int> out(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) out[i] = predict_one(model, features.row(i));
    return out;
}

// --- export ------------------------------------------------------------------

inline constexpr std::uint32_t kSvmFormatVersion = 1;

inline std::string encode_svm(const SvmModel& m) {
    BinaryWriter w;
    w.bytes("DNLSVM");
    w.u32(kSvmFormatVersion);
    w.f64(m.gamma);
    w.u64(m.dimension);
    w.u32(m.single_class ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(m.classes.size()));
    for (int c : m.classes) w.i64(c);
    w.u32(static_cast<std::uint32_t>(m.binaries.size()));
    for (const auto& b : m.binaries) {
        w.i64(b.positive_class);
        w.i64(b.negative_class);
        w.f64(b.rho);
        w.u64(b.iterations);
        w.u32(b.converged ? 1 : 0);
        w.u64(b.support_vectors.rows());
        for (double v : b.support_vectors.data()) w.f64(v);
        w.f64s(b.coefficients);
    }
    w.u32(static_cast<std::uint32_t>(m.warnings.size()));
    for (const auto& s : m.warnings) w.str(s);
    return w.buffer();
}

inline SvmModel decode_svm(std::string bytes) {
    BinaryReader r(std::move(bytes));
    if (r.bytes(6) != "DNLSVM") throw IoError("not an SVM model file");
    if (r.u32() != kSvmFormatVersion) throw IoError("unsupported SVM model version");
    SvmModel m;
    m.gamma = r.f64();
    m.dimension = r.u64();
    m.single_class = r.u32() != 0;
    const auto n_classes = r.u32();
    for (std::uint32_t i = 0; i < n_classes; ++i) m.classes.push_back(static_cast<int>(r.i64()));
    const auto n_bin = r.u32();
    for (std::uint32_t i = 0; i < n_bin; ++i) {
        BinaryModel b;
        b.positive_class = static_cast<int>(r.i64());
        b.negative_class = static_cast<int>(r.i64());
        b.rho = r.f64();
        b.iterations = r.u64();
        b.converged = r.u32() != 0;
        const auto n_sv = r.u64();
        b.support_vectors = Matrix(n_sv, m.dimension);
        for (double& v : b.support_vectors.data()) v = r.f64();
        b.coefficients = r.f64s();
        if (b.coefficients.size() != n_sv) throw IoError("coefficient count does not match support vectors");
        m.binaries.push_back(std::move(b));
    }
    const auto n_warn = r.u32();
    for (std::uint32_t i = 0; i < n_warn; ++i) m.warnings.push_back(r.str());
    if (!r.at_end()) throw IoError("trailing bytes in SVM model");
    return m;
}

// CSV aligned with timestamps: the row for sample i carries the timestamp of
// price index target_index[i] + 1, where the predicted return is realized.
inline void write_predictions_csv(std::ostream& out, const PriceSeries& series, const SampleSet& samples,
                                  std::span<const int> predicted) {
    if (predicted.size() != samples.size()) throw ShapeMismatch("one prediction per sample expected");
    out << "timestamp,return_index,actual,predicted\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto idx = samples.target_index[i];
        out << series.timestamps().at(idx + 1) << ',' << idx << ',' << samples.targets[i] << ',' << predicted[i]
            << '\n';
    }
}

}  // namespace denolab
