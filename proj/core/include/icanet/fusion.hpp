#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "icanet/data_io.hpp"

namespace icanet {

// Class probabilities in the fixed order happy, sad, neutral, anger.
struct ScoreVector {
    std::array<double, kNumClasses> p{};
};

struct FusionWeights {
    double rgb = 4.0;
    double flow = 2.0;
    double audio = 4.0;
};

// Convex combination with the weights normalized to sum 1 first. Weights
// must be non-negative with a positive sum.
ScoreVector fuse_scores(const ScoreVector& rgb, const ScoreVector& flow, const ScoreVector& audio,
                        const FusionWeights& weights);

// Argmax; ties resolve to the lowest class index.
int predict(const ScoreVector& scores);

struct ConfusionMatrix {
    // counts[truth][prediction]
    std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};
    std::int64_t total() const;
};

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels);

// Fraction of exact matches.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// One-vs-rest accuracy per class, (TP + TN) / total.
std::array<double, kNumClasses> per_class_accuracy(const ConfusionMatrix& matrix);

struct ClipScores {
    ScoreVector rgb, flow, audio;
};

// All non-negative integer triples summing to 10.
std::vector<std::array<int, 3>> default_weight_grid();

struct GridSearchResult {
    FusionWeights best;
    double best_accuracy = 0.0;
    std::vector<std::pair<std::array<int, 3>, double>> evaluated;  // grid order
};

// Exhaustive scan; ties keep the lexicographically smallest triple.
GridSearchResult weight_grid_search(const std::vector<ClipScores>& scores, const std::vector<int>& labels,
                                    const std::vector<std::array<int, 3>>& grid);

}  // namespace icanet
