#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "vexad/errors.hpp"
#include "vexad/rng.hpp"
#include "vexad/scorer.hpp"

using namespace vexad;

namespace {

LabeledSet blobs(Rng& rng, int per_class, double sep) {
    LabeledSet d;
    d.features.resize(2, 2 * per_class);
    for (int i = 0; i < 2 * per_class; ++i) {
        const int y = i < per_class ? 1 : -1;
        d.features(0, i) = y * sep + 0.5 * rng.normal();
        d.features(1, i) = 0.3 * y * sep + 0.5 * rng.normal();
        d.labels.push_back(y);
    }
    return d;
}

}  // namespace

TEST_CASE("symmetric 1-D pair puts the boundary at 0") {
    LabeledSet d;
    d.features.resize(1, 2);
    d.features << -1.0, 1.0;
    d.labels = {-1, 1};
    const Scorer s = train(d, {});
    CHECK(std::abs(s.bias()) < 1e-12);
    CHECK(s.score(Eigen::VectorXd::Zero(1)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.weights()(0) > 0);
    CHECK_FALSE(s.degenerate());
}

TEST_CASE("separable blobs are fitted exactly") {
    Rng rng(12);
    int checked = 0;
    for (int rep = 0; rep < 10; ++rep) {
        const LabeledSet d = blobs(rng, 10, 2.5);
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i < 20; ++i) pts.emplace_back(d.features(0, i), d.features(1, i));
        if (!oracle::has_bisector_separator(pts, d.labels)) continue;  // only claim accuracy 1 when a separator exists
        const Scorer s = train(d, {});
        int correct = 0;
        for (int i = 0; i < 20; ++i) correct += (s.score(d.features.col(i)) >= 0.5) == (d.labels[i] == 1);
        CHECK(correct == 20);
        ++checked;
    }
    CHECK(checked >= 5);
}

TEST_CASE("single-class input gives a degenerate constant scorer") {
    LabeledSet d;
    d.features = Eigen::MatrixXd::Random(3, 16);
    d.labels.assign(16, -1);
    Scorer s;
    CHECK_NOTHROW(s = train(d, {}));
    CHECK(s.degenerate());
    CHECK(s.weights().isZero());
    CHECK(s.score(Eigen::VectorXd::Random(3)) == doctest::Approx(0.05));
    CHECK(s.score(Eigen::VectorXd::Random(3)) <= 0.5);

    d.labels.assign(16, 1);
    const Scorer p = train(d, {});
    CHECK(p.degenerate());
    CHECK(p.score(Eigen::VectorXd::Zero(3)) == doctest::Approx(0.95));
}

TEST_CASE("zero scorer gives one half everywhere") {
    const Scorer s(Eigen::VectorXd::Zero(4), 0.0);
    Rng rng(1);
    for (int i = 0; i < 10; ++i) CHECK(s.score(oracle::random_matrix(rng, 4, 1, 50).col(0)) == 0.5);
}

TEST_CASE("huge margins are clamped") {
    Eigen::VectorXd w(1);
    w << 1.0;
    const Scorer s(w, 0.0);
    Eigen::VectorXd x(1);
    x << 1e6;
    CHECK(s.score(x) == 1.0 - kProbEps);
    CHECK(std::isfinite(std::log(1.0 - s.score(x))));
    x << -1e6;
    CHECK(s.score(x) == kProbEps);
    CHECK(std::isfinite(std::log(s.score(x))));
}

TEST_CASE("two-class probabilities sum to one") {
    Rng rng(2);
    const Scorer s(oracle::random_matrix(rng, 3, 1).col(0), 0.3);
    for (int i = 0; i < 50; ++i) {
        const Eigen::VectorXd x = oracle::random_matrix(rng, 3, 1, 3).col(0);
        const auto g = score_gradient(s, x);
        CHECK(s.score(x) + (1.0 - s.score(x)) == 1.0);
        CHECK((g.change + g.no_change).isZero(0.0));
    }
}

TEST_CASE("gradient special cases") {
    const Scorer zero(Eigen::VectorXd::Zero(3), 1.7);
    const auto g0 = score_gradient(zero, Eigen::MatrixXd::Random(3, 4));
    CHECK(g0.change.isZero(0.0));
    CHECK(g0.no_change.isZero(0.0));

    Eigen::VectorXd w(2);
    w << 3.0, -4.0;
    const Scorer s(w, 0.0);
    Eigen::MatrixXd V(2, 2);
    V << 0.0, 4.0, 0.0, 3.0;  // both columns have margin 0
    const auto g = score_gradient(s, V);
    CHECK(g.change.col(0).norm() == doctest::Approx(0.25 * w.norm()).epsilon(1e-15));
    CHECK(g.change.col(1).norm() == doctest::Approx(1.25));
}

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(33);
    const double h = 1e-5;
    for (int probe = 0; probe < 100; ++probe) {
        const int d = 1 + static_cast<int>(rng.below(6));
        const Scorer s(oracle::random_matrix(rng, d, 1).col(0), rng.normal());
        const Eigen::MatrixXd V = oracle::random_matrix(rng, d, 3);
        const auto g = score_gradient(s, V);
        for (int k = 0; k < 3; ++k) {
            Eigen::VectorXd fd(d);
            for (int j = 0; j < d; ++j) {
                Eigen::VectorXd xp = V.col(k), xm = V.col(k);
                xp(j) += h;
                xm(j) -= h;
                fd(j) = (s.score(xp) - s.score(xm)) / (2 * h);
            }
            const double rel = (fd - g.change.col(k)).norm() / std::max(g.change.col(k).norm(), 1e-12);
            CHECK(rel < 1e-4);
        }
    }
}

TEST_CASE("training loss never increases and ends near a stationary point") {
    Rng rng(4);
    for (int rep = 0; rep < 5; ++rep) {
        LabeledSet d = blobs(rng, 15, 0.6);
        d.features.row(1) *= 40.0;  // badly scaled second feature
        TrainTrace tr;
        const TrainConfig cfg;
        const Scorer s = train(d, cfg, &tr);
        REQUIRE(tr.loss.size() >= 2);
        for (std::size_t i = 1; i < tr.loss.size(); ++i) CHECK(tr.loss[i] <= tr.loss[i - 1] + 1e-12);
        CHECK(training_loss(d, cfg, s.weights(), s.bias()) == doctest::Approx(tr.loss.back()).epsilon(1e-9));

        // Central differences of the objective around the returned optimum.
        const double h = 1e-6;
        for (int j = 0; j < 2; ++j) {
            Eigen::VectorXd wp = s.weights(), wm = s.weights();
            wp(j) += h;
            wm(j) -= h;
            const double gj = (training_loss(d, cfg, wp, s.bias()) - training_loss(d, cfg, wm, s.bias())) / (2 * h);
            CHECK(std::abs(gj) < 1e-3);
        }
        const double gb =
            (training_loss(d, cfg, s.weights(), s.bias() + h) - training_loss(d, cfg, s.weights(), s.bias() - h)) /
            (2 * h);
        CHECK(std::abs(gb) < 1e-3);
    }
}

TEST_CASE("training is deterministic") {
    Rng rng(5);
    const LabeledSet d = blobs(rng, 12, 1.0);
    CHECK(train(d, {}) == train(d, {}));
}

TEST_CASE("json round trip") {
    Eigen::VectorXd w(3);
    w << 0.1, -2.5, 1e-17;
    const Scorer s(w, -0.75, false, 48);
    CHECK(scorer_from_json(nlohmann::json::parse(to_json(s).dump())) == s);
}

TEST_CASE("bad inputs are rejected") {
    LabeledSet d;
    d.features = Eigen::MatrixXd::Zero(2, 3);
    d.labels = {1, -1};
    CHECK_THROWS_AS(train(d, {}), DimensionError);
    d.labels = {1, 0, -1};
    CHECK_THROWS_AS(train(d, {}), ValidationError);
    const Scorer s(Eigen::VectorXd::Zero(2), 0.0);
    CHECK_THROWS_AS(s.score(Eigen::VectorXd::Zero(3)), DimensionError);
    CHECK_THROWS_AS(Scorer(Eigen::VectorXd::Constant(2, std::nan("")), 0.0), NumericError);
}
