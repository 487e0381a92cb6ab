#include "doctest.h"

#include <stdexcept>

#include <cmath>

#include "taskforge/geometry.hpp"
#include "taskforge/rng.hpp"
#include "taskforge/synth.hpp"

using namespace taskforge;

namespace {

TensorMap flat(std::vector<float> data, const std::string& name = "w") {
    TensorMap m;
    m.set(name, Tensor{{static_cast<int64_t>(data.size())}, std::move(data)});
    return m;
}

TensorMap random_map(uint64_t seed, size_t d) {
    TensorMap m;
    CounterRng rng(derive_stream_key(seed, "geom", "w"));
    Tensor t;
    t.shape = {static_cast<int64_t>(d)};
    t.data.resize(d);
    for (size_t i = 0; i < d; ++i) t.data[i] = static_cast<float>(rng.gaussian(i));
    m.set("w", std::move(t));
    return m;
}

}  // namespace

TEST_CASE("cosine similarity endpoints") {
    auto a = random_map(1, 256);
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    TensorMap neg = a;
    for (auto& [_, t] : neg.entries()) {
        for (auto& v : t.data) v = -v;
    }
    CHECK(cosine_similarity(a, neg) == doctest::Approx(-1.0).epsilon(1e-12));

    auto x = flat({1, 0, 2, 0});
    auto y = flat({0, 3, 0, 4});
    CHECK(cosine_similarity(x, y) == 0.0);

    CHECK_THROWS_AS(cosine_similarity(a, flat({0, 0}, "w")), std::invalid_argument);
}

TEST_CASE("cosine is symmetric and bounded") {
    auto a = random_map(11, 300);
    auto b = random_map(12, 300);
    double ab = cosine_similarity(a, b);
    CHECK(ab == cosine_similarity(b, a));
    CHECK(std::abs(ab) <= 1.0 + 1e-12);
}

TEST_CASE("sign agreement direct counts") {
    CHECK(sign_agreement(flat({1, -1, 1}), flat({1, 1, -1})) == doctest::Approx(1.0 / 3.0));
    auto a = random_map(21, 64);
    CHECK(sign_agreement(a, a) == 1.0);
    // zero-vs-zero counts as agreeing
    CHECK(sign_agreement(flat({0, 1}), flat({0, 1})) == 1.0);
    CHECK(sign_agreement(flat({0, 1}), flat({1, 1})) == 0.5);
}

TEST_CASE("sign agreement equals 1 minus normalized sign Hamming distance") {
    auto a = random_map(31, 200);
    auto b = random_map(32, 200);
    double sa = sign_agreement(a, b);
    int64_t mismatch = 0;
    const auto& da = a.at("w").data;
    const auto& db = b.at("w").data;
    for (size_t i = 0; i < da.size(); ++i) {
        auto sign = [](float v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); };
        if (sign(da[i]) != sign(db[i])) ++mismatch;
    }
    CHECK(sa == doctest::Approx(1.0 - mismatch / 200.0));
}

TEST_CASE("independent gaussians agree about half the time") {
    size_t d = 1000000;
    auto a = random_map(41, d);
    auto b = random_map(42, d);
    double sigma = sign_agreement(a, b);
    CHECK(std::abs(sigma - 0.5) <= 0.0015);  // 3-sigma Bernoulli bound
}

TEST_CASE("summary stats") {
    auto s = summary_stats(flat({0.0005f, 0.002f}), 1e-3);
    CHECK(s.sparsity == 0.5);

    auto z = summary_stats(flat({0, 0, 0}), 1e-3);
    CHECK(z.l2 == 0.0);
    CHECK(z.mean_abs == 0.0);
    CHECK(z.sparsity == 1.0);

    auto v = summary_stats(flat({3, 4}), 1e-3);
    CHECK(v.l2 == doctest::Approx(5.0));
    CHECK(v.mean_abs == doctest::Approx(3.5));
}

TEST_CASE("displacement check orthogonal pair") {
    auto t1 = flat({2, 0});
    auto t2 = flat({0, 2});
    auto dc = displacement_check({&t1, &t2}, 0);
    CHECK(dc.actual == doctest::Approx(2.0));
    CHECK(dc.predicted == doctest::Approx(2.0));
}

TEST_CASE("displacement check single vector") {
    auto t1 = flat({1, 2, 3});
    auto dc = displacement_check({&t1}, 0);
    CHECK(dc.actual == 0.0);
    CHECK(dc.predicted == 0.0);
}

TEST_CASE("displacement check collinear discrepancy") {
    auto t1 = flat({1, 1});
    auto t2 = t1;
    auto dc = displacement_check({&t1, &t2}, 0);
    CHECK(dc.actual == doctest::Approx(0.0));
    CHECK(dc.predicted == doctest::Approx(0.25 * 2.0 + 0.25 * 2.0));
}

TEST_CASE("displacement cross-term bound holds on random inputs") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        std::vector<TensorMap> maps;
        for (int v = 0; v < 4; ++v) maps.push_back(random_map(100 + seed * 10 + v, 128));
        std::vector<const TensorMap*> ptrs;
        for (auto& m : maps) ptrs.push_back(&m);
        size_t n = ptrs.size();
        double n_d = static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) {
            auto dc = displacement_check(ptrs, i);
            double cross_i = 0.0, cross_jl = 0.0;
            for (size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                cross_i += std::abs(dot(*ptrs[i], *ptrs[j]));
                for (size_t l = j + 1; l < n; ++l) {
                    if (l == i) continue;
                    cross_jl += std::abs(dot(*ptrs[j], *ptrs[l]));
                }
            }
            double bound = 2.0 * (n_d - 1.0) / (n_d * n_d) * cross_i +
                           2.0 / (n_d * n_d) * cross_jl;
            CHECK(std::abs(dc.actual - dc.predicted) <= bound * (1.0 + 1e-9) + 1e-9);
        }
    }
}

TEST_CASE("geometry report invariants") {
    auto a = random_map(201, 128);
    auto b = random_map(202, 128);
    auto c = random_map(203, 128);
    auto rep = geometry_report({&a, &b, &c}, {"a", "b", "c"});
    for (size_t i = 0; i < 3; ++i) {
        CHECK(rep.cosine[i][i] == 1.0);
        CHECK(rep.sign_agreement[i][i] == 1.0);
        for (size_t j = 0; j < 3; ++j) {
            CHECK(rep.cosine[i][j] == rep.cosine[j][i]);
            CHECK(rep.sign_agreement[i][j] >= 0.0);
            CHECK(rep.sign_agreement[i][j] <= 1.0);
            CHECK(rep.sparsity[i] >= 0.0);
            CHECK(rep.sparsity[i] <= 1.0);
        }
    }
}

TEST_CASE("per layer report") {
    SUBCASE("synthetic 3-layer norms reproduced exactly") {
        TensorMap tv;
        tv.set("enc.layers.0.w", Tensor{{1}, {1.0f}});
        tv.set("enc.layers.1.w", Tensor{{1}, {2.0f}});
        tv.set("enc.layers.2.w", Tensor{{1}, {3.0f}});
        auto rep = per_layer_report({&tv});
        CHECK(rep.layer_labels == std::vector<std::string>{"0", "1", "2"});
        CHECK(rep.per_layer_norms[0] == std::vector<double>{1.0, 2.0, 3.0});
    }
    SUBCASE("single layer mean cosine equals global cosine") {
        TensorMap a, b;
        a.set("enc.layers.0.w", Tensor{{3}, {1, 2, 3}});
        b.set("enc.layers.0.w", Tensor{{3}, {2, -1, 1}});
        auto rep = per_layer_report({&a, &b});
        CHECK(rep.per_layer_mean_cosine[0] == doctest::Approx(cosine_similarity(a, b)));
    }
    SUBCASE("disjoint layer supports") {
        TensorMap a, b;
        a.set("enc.layers.0.w", Tensor{{2}, {1, 1}});
        a.set("enc.layers.1.w", Tensor{{2}, {0, 0}});
        b.set("enc.layers.0.w", Tensor{{2}, {0, 0}});
        b.set("enc.layers.1.w", Tensor{{2}, {2, 2}});
        auto rep = per_layer_report({&a, &b});
        CHECK(rep.per_layer_mean_cosine[0] == 0.0);
        CHECK(rep.per_layer_mean_cosine[1] == 0.0);
        CHECK(rep.per_layer_norms[0][1] == 0.0);
        CHECK(rep.per_layer_norms[1][0] == 0.0);
    }
    SUBCASE("unmatched names group under other") {
        TensorMap a;
        a.set("embedding.w", Tensor{{1}, {1.0f}});
        a.set("enc.layers.3.w", Tensor{{1}, {1.0f}});
        auto rep = per_layer_report({&a});
        CHECK(rep.layer_labels == std::vector<std::string>{"3", "other"});
    }
}

TEST_CASE("pca collinear points") {
    auto p0 = flat({0, 0});
    auto p1 = flat({1, 1});
    auto p2 = flat({2, 2});
    auto rep = checkpoint_pca({&p0, &p1, &p2}, {"a", "b", "c"}, 1);
    CHECK(rep.explained_variance_ratio[0] == doctest::Approx(1.0));
    CHECK(rep.effective_rank == 1);
}

TEST_CASE("pca equilateral triangle has two equal ratios") {
    auto p0 = flat({0.0f, 0.0f});
    auto p1 = flat({1.0f, 0.0f});
    auto p2 = flat({0.5f, static_cast<float>(std::sqrt(3.0) / 2.0)});
    auto rep = checkpoint_pca({&p0, &p1, &p2}, {"a", "b", "c"}, 2);
    CHECK(rep.explained_variance_ratio[0] == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(rep.explained_variance_ratio[1] == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("pca coordinates preserve pairwise distances") {
    std::vector<TensorMap> pts;
    for (int i = 0; i < 4; ++i) pts.push_back(random_map(300 + i, 64));
    std::vector<const TensorMap*> ptrs;
    for (auto& p : pts) ptrs.push_back(&p);
    auto rep = checkpoint_pca(ptrs, {"a", "b", "c", "d"}, 3);

    for (size_t i = 0; i < 4; ++i) {
        for (size_t j = i + 1; j < 4; ++j) {
            double orig = 0.0;
            const auto& di = pts[i].at("w").data;
            const auto& dj = pts[j].at("w").data;
            for (size_t e = 0; e < di.size(); ++e) {
                double d = static_cast<double>(di[e]) - dj[e];
                orig += d * d;
            }
            orig = std::sqrt(orig);
            double emb = 0.0;
            for (size_t c = 0; c < 3; ++c) {
                double d = rep.coordinates[i][c] - rep.coordinates[j][c];
                emb += d * d;
            }
            emb = std::sqrt(emb);
            CHECK(emb == doctest::Approx(orig).epsilon(1e-6));
        }
    }
}

TEST_CASE("pca explained ratios are nonincreasing and sum to at most 1") {
    std::vector<TensorMap> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(random_map(400 + i, 32));
    std::vector<const TensorMap*> ptrs;
    for (auto& p : pts) ptrs.push_back(&p);
    auto rep = checkpoint_pca(ptrs, {"a", "b", "c", "d", "e"}, 4);
    double sum = 0.0;
    for (size_t i = 0; i < rep.explained_variance_ratio.size(); ++i) {
        if (i > 0) CHECK(rep.explained_variance_ratio[i] <= rep.explained_variance_ratio[i - 1]);
        sum += rep.explained_variance_ratio[i];
    }
    CHECK(sum <= 1.0 + 1e-9);
    CHECK(sum == doctest::Approx(1.0));  // full component count, full rank
}
