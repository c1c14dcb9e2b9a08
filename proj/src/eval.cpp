#include "geoctx/eval.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include "geoctx/error.hpp"

namespace geoctx {

namespace {

void check_predictions(const PredictionSet &preds, std::size_t classes) {
    for (const auto &p : preds) {
        if (p.scores.size() != classes) throw ShapeError("prediction has the wrong number of scores");
        if (p.label < 0 || static_cast<std::size_t>(p.label) >= classes) {
            throw InvalidArgument("test label " + std::to_string(p.label) + " outside the class set");
        }
    }
}

}  // namespace

std::optional<double> average_precision(std::span<const double> scores, std::span<const bool> positives) {
    if (scores.size() != positives.size()) throw ShapeError("scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (positives[order[rank]]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    if (hits == 0) return std::nullopt;
    return sum / static_cast<double>(hits);
}

std::vector<std::optional<double>> per_class_ap(const PredictionSet &preds, std::size_t classes) {
    check_predictions(preds, classes);
    std::vector<std::optional<double>> out(classes);
    std::vector<double> scores(preds.size());
    auto positives = std::make_unique<bool[]>(preds.size());
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < preds.size(); ++i) {
            scores[i] = preds[i].scores[c];
            positives[i] = preds[i].label == static_cast<int>(c);
        }
        out[c] = average_precision(scores, std::span<const bool>(positives.get(), preds.size()));
    }
    return out;
}

double mean_ap(const PredictionSet &preds, std::size_t classes) {
    const auto aps = per_class_ap(preds, classes);
    double sum = 0.0;
    std::size_t n = 0;
    std::size_t skipped = 0;
    for (const auto &ap : aps) {
        if (ap) {
            sum += *ap;
            ++n;
        } else {
            ++skipped;
        }
    }
    if (skipped) warn("mean AP skips " + std::to_string(skipped) + " classes without test positives");
    if (n == 0) throw InvalidArgument("no class has test positives");
    return sum / static_cast<double>(n);
}

std::vector<int> top_k(std::span<const double> scores, std::size_t k) {
    std::vector<int> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    k = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    idx.resize(k);
    return idx;
}

std::vector<std::optional<double>> per_class_accuracy_at_k(const PredictionSet &preds,
                                                           std::size_t classes, std::size_t k) {
    if (k < 1) throw InvalidArgument("k must be at least 1");
    check_predictions(preds, classes);
    std::vector<std::size_t> hit(classes, 0), total(classes, 0);
    for (const auto &p : preds) {
        const auto top = top_k(p.scores, k);
        ++total[static_cast<std::size_t>(p.label)];
        if (std::find(top.begin(), top.end(), p.label) != top.end()) ++hit[static_cast<std::size_t>(p.label)];
    }
    std::vector<std::optional<double>> out(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        if (total[c]) out[c] = static_cast<double>(hit[c]) / static_cast<double>(total[c]);
    }
    return out;
}

double normalized_accuracy_at_k(const PredictionSet &preds, std::size_t classes, std::size_t k) {
    const auto acc = per_class_accuracy_at_k(preds, classes, k);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &a : acc) {
        if (a) {
            sum += *a;
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

MetricsSummary evaluate(const PredictionSet &preds, std::size_t classes) {
    MetricsSummary s;
    const auto aps = per_class_ap(preds, classes);
    const auto a1 = per_class_accuracy_at_k(preds, classes, 1);
    const auto a5 = per_class_accuracy_at_k(preds, classes, 5);
    std::vector<std::size_t> counts(classes, 0);
    for (const auto &p : preds) ++counts[static_cast<std::size_t>(p.label)];
    for (std::size_t c = 0; c < classes; ++c) {
        s.per_class.push_back({static_cast<int>(c), aps[c], a1[c].value_or(0.0), a5[c].value_or(0.0), counts[c]});
    }
    s.mean_ap = mean_ap(preds, classes);
    s.acc1 = normalized_accuracy_at_k(preds, classes, 1);
    s.acc5 = normalized_accuracy_at_k(preds, classes, 5);
    s.n_test = preds.size();
    return s;
}

}  // namespace geoctx
