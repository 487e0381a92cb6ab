#include "doctest.h"

#include <stdexcept>

#include <cmath>

#include "taskforge/geometry.hpp"
#include "taskforge/synth.hpp"

using namespace taskforge;

TEST_CASE("disjoint-support vectors have exactly zero pairwise cosine") {
    SynthSpec spec;
    spec.n_vectors = 5;
    spec.dim = 1000;
    spec.support_mode = SupportMode::DisjointSupport;
    spec.target_norms = {13.58, 9.51, 6.86, 1.45, 4.79};
    auto tvs = generate(spec);
    REQUIRE(tvs.size() == 5);

    for (size_t i = 0; i < 5; ++i) {
        CHECK(l2_norm(tvs[i].delta) == doctest::Approx(spec.target_norms[i]).epsilon(1e-4));
        for (size_t j = i + 1; j < 5; ++j) {
            CHECK(cosine_similarity(tvs[i].delta, tvs[j].delta) == 0.0);
        }
    }
}

TEST_CASE("controlled cosine hits the requested value") {
    SynthSpec spec;
    spec.n_vectors = 4;
    spec.dim = 512;
    spec.support_mode = SupportMode::ControlledCosine;
    spec.target_cosine = 0.09;
    auto tvs = generate(spec);
    for (size_t i = 0; i < 4; ++i) {
        for (size_t j = i + 1; j < 4; ++j) {
            CHECK(cosine_similarity(tvs[i].delta, tvs[j].delta) ==
                  doctest::Approx(0.09).epsilon(1e-6));
        }
    }
}

TEST_CASE("controlled cosine rejects infeasible gram matrices") {
    SynthSpec spec;
    spec.n_vectors = 3;
    spec.dim = 64;
    spec.support_mode = SupportMode::ControlledCosine;
    spec.target_cosine = -0.9;  // PSD requires t >= -1/(n-1) = -0.5
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec.target_cosine = 1.5;
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec.target_cosine = -0.4;
    CHECK_NOTHROW(generate(spec));
}

TEST_CASE("gaussian mode respects norms and sparsity") {
    SynthSpec spec;
    spec.n_vectors = 3;
    spec.dim = 10000;
    spec.support_mode = SupportMode::RandomGaussian;
    spec.target_norms = {2.0, 5.0, 0.5};
    spec.sparsity = 0.3;
    auto tvs = generate(spec);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(l2_norm(tvs[i].delta) == doctest::Approx(spec.target_norms[i]).epsilon(1e-5));
        const auto& d = tvs[i].delta.at("v").data;
        size_t zeros = 0;
        for (float v : d) {
            if (v == 0.0f) ++zeros;
        }
        CHECK(std::abs(zeros / 10000.0 - 0.3) <= 0.02);
    }
}

TEST_CASE("independent gaussian vectors agree in sign about half the time") {
    SynthSpec spec;
    spec.n_vectors = 2;
    spec.dim = 1000000;
    spec.support_mode = SupportMode::RandomGaussian;
    auto tvs = generate(spec);
    double sigma = sign_agreement(tvs[0].delta, tvs[1].delta);
    CHECK(std::abs(sigma - 0.5) <= 0.0015);
}

TEST_CASE("generation is deterministic per seed and distinct across seeds") {
    SynthSpec spec;
    spec.n_vectors = 2;
    spec.dim = 256;
    auto a = generate(spec);
    auto b = generate(spec);
    CHECK(a[0].delta == b[0].delta);
    spec.seed = 43;
    auto c = generate(spec);
    CHECK(a[0].delta.at("v").data != c[0].delta.at("v").data);
}

TEST_CASE("prediction report on disjoint supports is tight") {
    SynthSpec spec;
    spec.n_vectors = 5;
    spec.dim = 2000;
    spec.support_mode = SupportMode::DisjointSupport;
    spec.target_norms = {13.58, 9.51, 6.86, 1.45, 4.79};
    auto tvs = generate(spec);
    std::vector<const TaskVector*> ptrs;
    for (auto& tv : tvs) ptrs.push_back(&tv);

    auto rep = verify_predictions(ptrs);
    for (size_t i = 0; i < 5; ++i) {
        CHECK(rep.norms[i] == doctest::Approx(spec.target_norms[i]).epsilon(1e-4));
        // orthogonality prediction is exact on truly disjoint supports
        CHECK(std::abs(rep.displacement_actual[i] - rep.displacement_predicted[i]) <=
              1e-10 * std::max(1.0, rep.displacement_actual[i]));
        CHECK(rep.cross_term_bound[i] == doctest::Approx(0.0).scale(1.0));
        for (size_t j = 0; j < 5; ++j) {
            if (i != j) CHECK(rep.cosine[i][j] == 0.0);
        }
    }
}

TEST_CASE("prediction report flags collinear vectors") {
    SynthSpec spec;
    spec.n_vectors = 2;
    spec.dim = 128;
    spec.support_mode = SupportMode::ControlledCosine;
    spec.target_cosine = 0.95;  // nearly identical directions
    auto tvs = generate(spec);
    std::vector<const TaskVector*> ptrs = {&tvs[0], &tvs[1]};
    auto rep = verify_predictions(ptrs);
    // prediction overshoots by the cross term, and the bound covers it
    for (size_t i = 0; i < 2; ++i) {
        double gap = std::abs(rep.displacement_actual[i] - rep.displacement_predicted[i]);
        CHECK(gap > 0.1);
        CHECK(gap <= rep.cross_term_bound[i] * (1.0 + 1e-9) + 1e-9);
    }
}

TEST_CASE("displacement scales quadratically under uniform vector scaling") {
    SynthSpec spec;
    spec.n_vectors = 3;
    spec.dim = 500;
    auto tvs = generate(spec);
    std::vector<const TaskVector*> p1;
    for (auto& tv : tvs) p1.push_back(&tv);
    auto rep1 = verify_predictions(p1);

    auto scaled = tvs;
    for (auto& tv : scaled) {
        for (auto& [_, t] : tv.delta.entries()) {
            for (auto& v : t.data) v *= 3.0f;
        }
    }
    std::vector<const TaskVector*> p2;
    for (auto& tv : scaled) p2.push_back(&tv);
    auto rep2 = verify_predictions(p2);

    for (size_t i = 0; i < 3; ++i) {
        CHECK(rep2.displacement_actual[i] ==
              doctest::Approx(9.0 * rep1.displacement_actual[i]).epsilon(1e-4));
        CHECK(rep2.displacement_predicted[i] ==
              doctest::Approx(9.0 * rep1.displacement_predicted[i]).epsilon(1e-4));
    }
}

TEST_CASE("discarded fraction grows with the trim level") {
    SynthSpec spec;
    spec.n_vectors = 2;
    spec.dim = 1000;
    auto tvs = generate(spec);
    std::vector<const TaskVector*> ptrs = {&tvs[0], &tvs[1]};
    auto rep = verify_predictions(ptrs, {0.0, 0.2, 0.5, 0.9});
    for (size_t i = 0; i < 2; ++i) {
        CHECK(rep.discarded_fraction[i][0] == 0.0);
        for (size_t k = 1; k < rep.trim_grid.size(); ++k) {
            CHECK(rep.discarded_fraction[i][k] >= rep.discarded_fraction[i][k - 1]);
            CHECK(rep.discarded_fraction[i][k] ==
                  doctest::Approx(rep.trim_grid[k]).epsilon(0.01));
        }
    }
}

TEST_CASE("spec validation") {
    SynthSpec spec;
    spec.n_vectors = 0;
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec.n_vectors = 2;
    spec.dim = 0;
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec.dim = 100;
    spec.target_norms = {1.0};  // wrong count
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec.target_norms.clear();
    spec.sparsity = 1.5;
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}
