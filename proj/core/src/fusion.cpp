#include "icanet/fusion.hpp"

#include <stdexcept>

namespace icanet {

ScoreVector fuse_scores(const ScoreVector& rgb, const ScoreVector& flow, const ScoreVector& audio,
                        const FusionWeights& weights) {
    if (weights.rgb < 0.0 || weights.flow < 0.0 || weights.audio < 0.0)
        throw std::invalid_argument("fuse_scores: weights must be non-negative");
    const double sum = weights.rgb + weights.flow + weights.audio;
    if (!(sum > 0.0)) throw std::invalid_argument("fuse_scores: weights must not all be zero");
    const double wr = weights.rgb / sum, wf = weights.flow / sum, wa = weights.audio / sum;
    ScoreVector out;
    for (int c = 0; c < kNumClasses; ++c) out.p[c] = wr * rgb.p[c] + wf * flow.p[c] + wa * audio.p[c];
    return out;
}

int predict(const ScoreVector& scores) {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
        if (scores.p[c] > scores.p[best]) best = c;
    return best;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t n = 0;
    for (const auto& row : counts)
        for (std::int64_t v : row) n += v;
    return n;
}

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                                    std::to_string(labels.size()) + " labels");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int t = labels[i], p = predictions[i];
        if (t < 0 || t >= kNumClasses || p < 0 || p >= kNumClasses)
            throw std::invalid_argument("confusion: class index out of range at item " + std::to_string(i));
        ++m.counts[t][p];
    }
    return m;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (labels.empty()) throw std::invalid_argument("accuracy: no items");
    const ConfusionMatrix m = confusion(predictions, labels);
    std::int64_t hits = 0;
    for (int c = 0; c < kNumClasses; ++c) hits += m.counts[c][c];
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::array<double, kNumClasses> per_class_accuracy(const ConfusionMatrix& matrix) {
    const std::int64_t total = matrix.total();
    if (total == 0) throw std::invalid_argument("per_class_accuracy: empty matrix");
    std::array<double, kNumClasses> out{};
    for (int c = 0; c < kNumClasses; ++c) {
        const std::int64_t tp = matrix.counts[c][c];
        std::int64_t fp = 0, fn = 0;
        for (int o = 0; o < kNumClasses; ++o) {
            if (o == c) continue;
            fp += matrix.counts[o][c];
            fn += matrix.counts[c][o];
        }
        const std::int64_t tn = total - tp - fp - fn;
        out[c] = static_cast<double>(tp + tn) / static_cast<double>(total);
    }
    return out;
}

std::vector<std::array<int, 3>> default_weight_grid() {
    std::vector<std::array<int, 3>> grid;
    for (int r = 0; r <= 10; ++r)
        for (int f = 0; f + r <= 10; ++f) grid.push_back({r, f, 10 - r - f});
    return grid;
}

GridSearchResult weight_grid_search(const std::vector<ClipScores>& scores, const std::vector<int>& labels,
                                    const std::vector<std::array<int, 3>>& grid) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("weight_grid_search: " + std::to_string(scores.size()) + " score rows vs " +
                                    std::to_string(labels.size()) + " labels");
    if (scores.empty()) throw std::invalid_argument("weight_grid_search: no items");
    if (grid.empty()) throw std::invalid_argument("weight_grid_search: empty grid");

    GridSearchResult result;
    bool have_best = false;
    std::array<int, 3> best_triple{};
    for (const auto& triple : grid) {
        if (triple[0] < 0 || triple[1] < 0 || triple[2] < 0 || triple[0] + triple[1] + triple[2] == 0)
            throw std::invalid_argument("weight_grid_search: bad grid triple");
        const FusionWeights w{static_cast<double>(triple[0]), static_cast<double>(triple[1]),
                              static_cast<double>(triple[2])};
        std::vector<int> preds(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i)
            preds[i] = predict(fuse_scores(scores[i].rgb, scores[i].flow, scores[i].audio, w));
        const double acc = accuracy(preds, labels);
        result.evaluated.push_back({triple, acc});
        const bool better = !have_best || acc > result.best_accuracy ||
                            (acc == result.best_accuracy && triple < best_triple);
        if (better) {
            have_best = true;
            result.best_accuracy = acc;
            best_triple = triple;
            result.best = w;
        }
    }
    return result;
}

}  // namespace icanet
