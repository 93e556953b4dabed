#pragma once

#include "denolab/error.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace denolab {

inline constexpr std::array<int, 3> kDirectionClasses{-1, 0, 1};

inline std::size_t class_slot(int label) {
    if (label < -1 || label > 1) throw UsageError("label outside {-1, 0, +1}: " + std::to_string(label));
    return static_cast<std::size_t>(label + 1);
}

struct ClassScore {
    int label = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;    // occurrences in the actual labels
    std::size_t predicted = 0;  // occurrences in the predictions

    bool operator==(const ClassScore&) const = default;
};

// confusion[a][p] counts samples with actual class a and predicted class p,
// both indexed -1, 0, +1 -> 0, 1, 2. The macro mean skips classes with zero
// support; they are listed in `excluded`.
struct F1Result {
    std::array<ClassScore, 3> per_class{};
    std::array<std::array<std::size_t, 3>, 3> confusion{};
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
    std::vector<int> excluded;

    bool operator==(const F1Result&) const = default;
};

inline F1Result f1_from_confusion(const std::array<std::array<std::size_t, 3>, 3>& confusion) {
    F1Result r;
    r.confusion = confusion;
    std::size_t total = 0;
    for (const auto& row : confusion)
        for (auto v : row) total += v;
    if (total == 0) throw EmptyInput("confusion matrix has no samples");

    double macro_sum = 0.0;
    double weighted_sum = 0.0;
    std::size_t macro_count = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        ClassScore& s = r.per_class[c];
        s.label = kDirectionClasses[c];
        const std::size_t tp = confusion[c][c];
        for (std::size_t k = 0; k < 3; ++k) {
            s.support += confusion[c][k];
            s.predicted += confusion[k][c];
        }
        s.precision = s.predicted ? static_cast<double>(tp) / static_cast<double>(s.predicted) : 0.0;
        s.recall = s.support ? static_cast<double>(tp) / static_cast<double>(s.support) : 0.0;
        s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        if (s.support == 0) {
            r.excluded.push_back(s.label);
            continue;
        }
        macro_sum += s.f1;
        ++macro_count;
        weighted_sum += s.f1 * static_cast<double>(s.support);
    }
    r.macro_f1 = macro_sum / static_cast<double>(macro_count);
    r.weighted_f1 = weighted_sum / static_cast<double>(total);
    return r;
}

inline F1Result f1_scores(std::span<const int> predicted, std::span<const int> actual) {
    if (predicted.empty() || actual.empty()) throw EmptyInput("f1 of an empty label sequence");
    if (predicted.size() != actual.size()) throw ShapeMismatch("predicted and actual differ in length");
    std::array<std::array<std::size_t, 3>, 3> confusion{};
    for (std::size_t i = 0; i < actual.size(); ++i) ++confusion[class_slot(actual[i])][class_slot(predicted[i])];
    return f1_from_confusion(confusion);
}

}  // namespace denolab
