#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace lcb;

namespace {

Matrix preds(std::initializer_list<std::vector<double>> r) {
    Matrix m(0, r.begin()->size());
    for (const auto& v : r) m.append_row(v);
    return m;
}

using R = Rational;

}  // namespace

TEST_CASE("correction relabels exactly the confident ids", "[reco]") {
    const std::vector<int> labels{2, 2, 2};
    Matrix p = preds({{0.9, 0.05, 0.05}, {0.15, 0.7, 0.15}, {0.1, 0.8, 0.1}});
    CorrectedDataset c = correct(labels, p, 0.8);
    CHECK(c.relabeled_ids == std::vector<std::size_t>{0, 2});
    CHECK(c.kept_ids == std::vector<std::size_t>{1});
    CHECK(c.corrected_labels == std::vector<int>{0, 2, 1});
    CHECK(c.confidence[1] == 0.7);
}

TEST_CASE("threshold extremes", "[reco]") {
    const std::vector<int> labels{1, 0, 1};
    Matrix p = preds({{0.6, 0.4}, {0.5, 0.5}, {0.2, 0.8}});
    CorrectedDataset all = correct(labels, p, 0.0);
    CHECK(all.relabeled_ids.size() == 3);
    CHECK(all.corrected_labels == std::vector<int>{0, 0, 1});
    CorrectedDataset none = correct(labels, p, 0.81);
    CHECK(none.relabeled_ids.empty());
    CHECK(none.corrected_labels == labels);
    CHECK_THROWS_AS(correct(labels, p, 1.2), ArgumentError);
}

TEST_CASE("relabeled set shrinks as the threshold rises", "[reco]") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix p(300, 3);
    for (std::size_t i = 0; i < 300; ++i) {
        double s = 0;
        for (std::size_t c = 0; c < 3; ++c) s += (p(i, c) = std::pow(unit(rng), 3));
        for (std::size_t c = 0; c < 3; ++c) p(i, c) /= s;
    }
    const std::vector<int> labels(300, 0);
    std::vector<std::size_t> prev;
    bool first = true;
    for (double tau : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) {
        CorrectedDataset c = correct(labels, p, tau);
        if (!first) CHECK(std::includes(prev.begin(), prev.end(), c.relabeled_ids.begin(), c.relabeled_ids.end()));
        prev = c.relabeled_ids;
        first = false;
    }
}

TEST_CASE("correcting twice with the same predictions changes nothing", "[reco]") {
    Matrix p = preds({{0.9, 0.1}, {0.3, 0.7}, {0.05, 0.95}});
    const std::vector<int> labels{1, 0, 0};
    CorrectedDataset once = correct(labels, p, 0.8);
    CorrectedDataset twice = correct(once.corrected_labels, p, 0.8);
    CHECK(twice.corrected_labels == once.corrected_labels);
}

TEST_CASE("threshold bound values", "[reco]") {
    CHECK(theorem1_bound(0.9) == Catch::Approx(0.95));
    CHECK(theorem1_bound(0.0) == 0.5);
    CHECK(theorem1_bound(1.0) == 1.0);
    CHECK_THROWS_AS(theorem1_bound(-0.1), ArgumentError);
}

TEST_CASE("relabel precision", "[reco]") {
    LabeledDataset ds(Matrix(3, 1, 0.0), {0, 1, 1}, {1, 1, 0}, 2);
    CorrectedDataset right = correct(ds.observed_labels(), preds({{0.9, 0.1}, {0.2, 0.8}, {0.3, 0.7}}), 0.5);
    RecoMetrics m = reco_metrics(right, ds);
    CHECK(m.relabeled == 3);
    CHECK(*m.precision == 1.0);
    CorrectedDataset none = correct(ds.observed_labels(), preds({{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}), 0.9);
    CHECK_FALSE(reco_metrics(none, ds).precision.has_value());
}

TEST_CASE("random consistent worlds hold the bound", "[reco]") {
    Theorem1Report r = verify_random_worlds(1000, 1);
    CHECK(r.worlds == 1000);
    CHECK(r.counterexamples == 0);
    CHECK(r.premises_true > 0);
}

TEST_CASE("noise into a class is the same from every input in generated worlds", "[reco]") {
    Rng rng = make_rng(3, "test/worlds");
    for (int k = 0; k < 200; ++k) {
        DiscreteNoisyWorld w = random_world(rng);
        REQUIRE_NOTHROW(validate_world(w));
        const auto c = static_cast<std::size_t>(w.num_classes);
        for (std::size_t x = 0; x < w.num_inputs(); ++x)
            for (std::size_t t = 0; t < c; ++t) {
                if (w.alpha[x][t] == R(1)) continue;
                // P(Ytilde = t | Y != t, x) computed directly from the tables.
                R num(0);
                for (std::size_t j = 0; j < c; ++j)
                    if (j != t) num += w.alpha[x][j] * w.transition[j][t];
                CHECK(num / (R(1) - w.alpha[x][t]) == world_rho(w, static_cast<int>(t)));
            }
    }
}

TEST_CASE("boundary inputs sit on the non-strict side", "[reco]") {
    // alpha_0(x0) = 1/2 exactly; noise into class 0 is 1/3 from every other class.
    std::vector<std::vector<R>> t{{R(1, 2), R(1, 4), R(1, 4)}, {R(1, 3), R(2, 3), R(0)}, {R(1, 3), R(0), R(2, 3)}};
    std::vector<std::vector<R>> alpha{{R(1, 2), R(1, 4), R(1, 4)}, {R(0), R(1), R(0)}};
    DiscreteNoisyWorld w = make_world({R(1, 2), R(1, 2)}, alpha, t);
    REQUIRE_NOTHROW(validate_world(w));
    const R rho = world_rho(w, 0);
    CHECK(rho == R(1, 3));
    // alpha_noisy = T00 * alpha + rho * (1 - alpha)
    CHECK(w.alpha_noisy[0][0] == R(1, 2) * R(1, 2) + rho * R(1, 2));
    CHECK(w.alpha_noisy[0][0] <= (R(1) + rho) / R(2));
    CHECK(verify_theorem1(w).pass);
}

TEST_CASE("noise-free deterministic worlds", "[reco]") {
    std::vector<std::vector<R>> id{{R(1), R(0)}, {R(0), R(1)}};
    std::vector<std::vector<R>> alpha{{R(1), R(0)}, {R(0), R(1)}};
    DiscreteNoisyWorld w = make_world({R(1, 3), R(2, 3)}, alpha, id);
    CHECK(world_rho(w, 0) == R(0));
    Theorem1Verdict v = verify_theorem1(w);
    CHECK(v.pass);
    CHECK(v.premises_true == 2);
}

TEST_CASE("input-dependent noise can break the bound", "[reco]") {
    // Class 1 always flips to 0, class 2 never does: P(Ytilde=0 | Y!=0, x) varies with x.
    std::vector<std::vector<R>> t{{R(1), R(0), R(0)}, {R(1), R(0), R(0)}, {R(0), R(0), R(1)}};
    std::vector<std::vector<R>> alpha{{R(2, 5), R(3, 5), R(0)}, {R(0), R(0), R(1)}};
    DiscreteNoisyWorld w = make_world({R(1, 10), R(9, 10)}, alpha, t);
    Theorem1Verdict v = verify_theorem1(w);
    CHECK_FALSE(v.pass);
    REQUIRE(v.counterexample);
    CHECK(v.counterexample->first == 0);
    CHECK(v.counterexample->second == 0);
}

TEST_CASE("inconsistent worlds are rejected", "[reco]") {
    std::vector<std::vector<R>> id{{R(1), R(0)}, {R(0), R(1)}};
    DiscreteNoisyWorld w = make_world({R(1)}, {{R(1, 2), R(1, 2)}}, id);
    w.alpha_noisy[0] = {R(3, 4), R(1, 4)};
    CHECK_THROWS_AS(validate_world(w), ArgumentError);
    DiscreteNoisyWorld bad_rows = make_world({R(1)}, {{R(1, 2), R(1, 2)}}, {{R(1), R(1)}, {R(0), R(1)}});
    CHECK_THROWS_AS(verify_theorem1(bad_rows), ArgumentError);
}
