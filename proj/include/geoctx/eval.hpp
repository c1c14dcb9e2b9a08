#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace geoctx {

struct Prediction {
    std::vector<double> scores;  // one per class
    int label = 0;
};

using PredictionSet = std::vector<Prediction>;

/// Non-interpolated AP: records sorted by descending score (ties by record
/// index ascending), averaged precision at the rank of each positive.
/// Returns nullopt when there are no positives.
std::optional<double> average_precision(std::span<const double> scores, std::span<const bool> positives);

struct ClassMetrics {
    int cls = 0;
    std::optional<double> ap;  // absent when the class has no test positives
    double acc1 = 0.0;
    double acc5 = 0.0;
    std::size_t n_test = 0;
};

/// Per-class AP over all classes; nullopt for classes without positives.
std::vector<std::optional<double>> per_class_ap(const PredictionSet &preds, std::size_t classes);

/// Unweighted mean of AP over classes with at least one positive; warns
/// when classes are skipped.
double mean_ap(const PredictionSet &preds, std::size_t classes);

/// Top-k class ids by descending score, ties by class id ascending.
std::vector<int> top_k(std::span<const double> scores, std::size_t k);

/// Per class c: fraction of records labelled c whose top-k contains c.
/// Entries for classes absent from the test set are nullopt.
std::vector<std::optional<double>> per_class_accuracy_at_k(const PredictionSet &preds,
                                                           std::size_t classes, std::size_t k);

/// Unweighted mean of per-class accuracy@k over classes present in the set.
double normalized_accuracy_at_k(const PredictionSet &preds, std::size_t classes, std::size_t k);

struct MetricsSummary {
    std::vector<ClassMetrics> per_class;
    double mean_ap = 0.0;
    double acc1 = 0.0;
    double acc5 = 0.0;
    std::size_t n_test = 0;
};

MetricsSummary evaluate(const PredictionSet &preds, std::size_t classes);

}  // namespace geoctx
