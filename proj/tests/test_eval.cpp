#include <doctest.h>

#include <cmath>
#include <memory>

#include "geoctx/eval.hpp"
#include "geoctx/random.hpp"
#include "oracles.hpp"
#include "warnings.hpp"

using namespace geoctx;

namespace {

double ap_of(std::vector<double> scores, std::vector<bool> pos) {
    // vector<bool> is packed, so copy into a plain array for the span
    std::unique_ptr<bool[]> b(new bool[pos.size()]);
    std::copy(pos.begin(), pos.end(), b.get());
    return average_precision(scores, std::span<const bool>(b.get(), pos.size())).value();
}

PredictionSet random_predictions(Rng &rng, std::size_t n, std::size_t classes) {
    PredictionSet out;
    for (std::size_t i = 0; i < n; ++i) {
        Prediction p;
        p.label = static_cast<int>(rng.below(classes));
        for (std::size_t c = 0; c < classes; ++c) p.scores.push_back(rng.uniform());
        // make the true class a bit more likely to win
        p.scores[p.label] += 0.3 * rng.uniform();
        out.push_back(p);
    }
    return out;
}

}  // namespace

TEST_CASE("average precision on small rankings") {
    CHECK(ap_of({0.9, 0.8, 0.7}, {true, false, false}) == doctest::Approx(1.0));
    CHECK(ap_of({0.9, 0.8, 0.7}, {false, true, false}) == doctest::Approx(0.5));
    CHECK(ap_of({0.9, 0.8, 0.7}, {true, false, true}) == doctest::Approx((1.0 + 2.0 / 3.0) / 2));
    CHECK(ap_of({0.1, 0.2, 0.3}, {true, true, true}) == doctest::Approx(1.0));
    // ties resolve by record index: the earlier record ranks first
    CHECK(ap_of({0.5, 0.5}, {false, true}) == doctest::Approx(0.5));
    CHECK(ap_of({0.5, 0.5}, {true, false}) == doctest::Approx(1.0));
    const std::vector<double> s{0.3, 0.1};
    const bool none[2] = {false, false};
    CHECK_FALSE(average_precision(s, std::span<const bool>(none, 2)).has_value());
}

TEST_CASE("mean AP and accuracy agree with brute-force oracles") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t classes = 2 + rng.below(8);
        const PredictionSet preds = random_predictions(rng, 20 + rng.below(200), classes);
        WarningCapture quiet;
        CHECK(mean_ap(preds, classes) == doctest::Approx(oracle::mean_ap(preds, classes)).epsilon(1e-12));
        for (std::size_t k : {1u, 2u, 5u}) {
            CHECK(normalized_accuracy_at_k(preds, classes, k) ==
                  doctest::Approx(oracle::accuracy_at_k(preds, classes, k)).epsilon(1e-12));
        }
    }
}

TEST_CASE("normalized accuracy weighs classes equally") {
    // ten records of class 0 all correct, one record of class 1 wrong
    PredictionSet preds;
    for (int i = 0; i < 10; ++i) preds.push_back({{0.9, 0.1}, 0});
    preds.push_back({{0.9, 0.1}, 1});
    CHECK(normalized_accuracy_at_k(preds, 2, 1) == doctest::Approx(0.5));
    CHECK(normalized_accuracy_at_k(preds, 2, 2) == doctest::Approx(1.0));
    preds.push_back({{0.1, 0.2}, 1});
    for (auto &p : preds) p.scores.push_back(0.0);
    const auto per = per_class_accuracy_at_k(preds, 3, 1);
    CHECK(per[0].value() == 1.0);
    CHECK(per[1].value() == 0.5);
    CHECK_FALSE(per[2].has_value());
}

TEST_CASE("top-k ordering and ties") {
    const std::vector<double> s{0.2, 0.5, 0.5, 0.1};
    CHECK(top_k(s, 2) == std::vector<int>{1, 2});
    CHECK(top_k(s, 3) == std::vector<int>{1, 2, 0});
    CHECK(top_k(s, 10).size() == 4);
}

TEST_CASE("accuracy at k is monotone in k and reaches one") {
    Rng rng(18);
    const std::size_t classes = 8;
    const PredictionSet preds = random_predictions(rng, 300, classes);
    double last = 0.0;
    for (std::size_t k = 1; k <= classes; ++k) {
        const double a = normalized_accuracy_at_k(preds, classes, k);
        CHECK(a >= last);
        last = a;
    }
    CHECK(last == doctest::Approx(1.0));
}

TEST_CASE("metrics ignore monotone rescaling of scores and record order") {
    Rng rng(19);
    const std::size_t classes = 5;
    const PredictionSet preds = random_predictions(rng, 150, classes);
    PredictionSet squashed = preds;
    for (auto &p : squashed) {
        for (double &v : p.scores) v = std::exp(3.0 * v) - 7.0;
    }
    CHECK(mean_ap(squashed, classes) == doctest::Approx(mean_ap(preds, classes)).epsilon(1e-12));
    CHECK(normalized_accuracy_at_k(squashed, classes, 1) == normalized_accuracy_at_k(preds, classes, 1));

    PredictionSet shuffled = preds;
    rng.shuffle(shuffled);
    CHECK(mean_ap(shuffled, classes) == doctest::Approx(mean_ap(preds, classes)).epsilon(1e-12));

    // repeating the whole test set leaves per-class accuracy unchanged
    PredictionSet twice = preds;
    twice.insert(twice.end(), preds.begin(), preds.end());
    CHECK(normalized_accuracy_at_k(twice, classes, 5) ==
          doctest::Approx(normalized_accuracy_at_k(preds, classes, 5)));
}

TEST_CASE("a perfect classifier scores one everywhere") {
    PredictionSet preds;
    for (int i = 0; i < 30; ++i) {
        Prediction p;
        p.label = i % 3;
        p.scores = {0.1, 0.1, 0.1};
        p.scores[p.label] = 0.8;
        preds.push_back(p);
    }
    const MetricsSummary m = evaluate(preds, 3);
    CHECK(m.mean_ap == doctest::Approx(1.0));
    CHECK(m.acc1 == doctest::Approx(1.0));
    CHECK(m.acc5 == doctest::Approx(1.0));
    CHECK(m.n_test == 30);
    REQUIRE(m.per_class.size() == 3);
    CHECK(m.per_class[2].n_test == 10);
}

TEST_CASE("classes without test positives are skipped with a warning") {
    PredictionSet preds{{{0.7, 0.2, 0.1}, 0}, {{0.2, 0.7, 0.1}, 1}};
    WarningCapture w;
    const auto ap = per_class_ap(preds, 3);
    CHECK(ap[0].value() == 1.0);
    CHECK_FALSE(ap[2].has_value());
    CHECK(w.seen().empty());
    CHECK(mean_ap(preds, 3) == doctest::Approx(1.0));
    CHECK(w.seen().size() == 1);
}
