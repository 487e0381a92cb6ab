#include "doctest.h"

#include <stdexcept>

#include <filesystem>

#include "taskforge/rng.hpp"
#include "taskforge/task_vector.hpp"

using namespace taskforge;

namespace {

Checkpoint make_ckpt(std::vector<float> w, const std::string& id = "m") {
    Checkpoint c;
    c.meta.model_id = id;
    c.meta.config_hash = config_hash(id);
    c.tensors.set("w", Tensor{{static_cast<int64_t>(w.size())}, std::move(w)});
    return c;
}

TaskVector random_tv(uint64_t seed, size_t d, const std::string& id) {
    TaskVector tv;
    tv.specialist_id = id;
    tv.base_hash = "shared";
    CounterRng rng(derive_stream_key(seed, id, "w"));
    Tensor t;
    t.shape = {static_cast<int64_t>(d)};
    t.data.resize(d);
    for (size_t i = 0; i < d; ++i) t.data[i] = static_cast<float>(rng.gaussian(i));
    tv.delta.set("w", std::move(t));
    return tv;
}

}  // namespace

TEST_CASE("extract subtracts elementwise") {
    auto base = make_ckpt({1, 1});
    auto spec = make_ckpt({3, 0}, "spec");
    auto tv = extract(base, spec);
    CHECK(tv.delta.at("w").data == std::vector<float>{2, -1});
    CHECK(tv.specialist_id == "spec");
    CHECK(tv.base_hash == base.meta.config_hash);
}

TEST_CASE("extract of identical checkpoints is zero") {
    auto base = make_ckpt({0.5f, -0.25f, 3.0f});
    auto tv = extract(base, base);
    for (float v : tv.delta.at("w").data) CHECK(v == 0.0f);
}

TEST_CASE("exclude patterns drop heads before differencing") {
    Checkpoint base, spec;
    base.tensors.set("encoder.w", Tensor{{1}, {1}});
    base.tensors.set("head.weight", Tensor{{1}, {5}});
    spec.tensors.set("encoder.w", Tensor{{1}, {2}});
    spec.tensors.set("head.weight", Tensor{{2}, {7, 8}});  // head may even differ in shape
    auto tv = extract(base, spec, {"head.*"});
    CHECK(tv.key_manifest() == std::vector<std::string>{"encoder.w"});
}

TEST_CASE("extract rejects manifest mismatch") {
    Checkpoint base, spec;
    base.tensors.set("a", Tensor{{1}, {1}});
    spec.tensors.set("b", Tensor{{1}, {1}});
    CHECK_THROWS_AS(extract(base, spec), std::runtime_error);
}

TEST_CASE("apply inverts extract exactly") {
    auto base = make_ckpt({0.1f, -2.75f, 1e-6f, 42.0f});
    auto spec = make_ckpt({-0.9f, 3.25f, 0.0f, 41.5f}, "s");
    auto tv = extract(base, spec);
    auto re = apply(base, tv.delta, 1.0);
    CHECK(re.tensors.at("w").data == spec.tensors.at("w").data);

    auto same = apply(base, tv.delta, 0.0);
    CHECK(same.tensors.at("w").data == base.tensors.at("w").data);
}

TEST_CASE("apply with scale -1 negates") {
    auto base = make_ckpt({1, 2});
    TensorMap tv;
    tv.set("w", Tensor{{2}, {0.5f, 1.0f}});
    auto out = apply(base, tv, -1.0);
    CHECK(out.tensors.at("w").data == std::vector<float>{0.5f, 1.0f});
}

TEST_CASE("apply copies tensors absent from the task vector") {
    Checkpoint base;
    base.tensors.set("a", Tensor{{1}, {1}});
    base.tensors.set("b", Tensor{{1}, {2}});
    TensorMap tv;
    tv.set("a", Tensor{{1}, {10}});
    auto out = apply(base, tv, 1.0);
    CHECK(out.tensors.at("a").data == std::vector<float>{11});
    CHECK(out.tensors.at("b").data == std::vector<float>{2});
}

TEST_CASE("linear_combine matches a brute-force 64-bit sum") {
    auto t1 = random_tv(1, 500, "a");
    auto t2 = random_tv(2, 500, "b");
    auto t3 = random_tv(3, 500, "c");
    std::vector<double> coeffs = {0.3, -1.2, 2.5};
    auto out = linear_combine({&t1, &t2, &t3}, coeffs);

    const auto& d1 = t1.delta.at("w").data;
    const auto& d2 = t2.delta.at("w").data;
    const auto& d3 = t3.delta.at("w").data;
    for (size_t i = 0; i < 500; ++i) {
        double expect = coeffs[0] * static_cast<double>(d1[i]) +
                        coeffs[1] * static_cast<double>(d2[i]) +
                        coeffs[2] * static_cast<double>(d3[i]);
        CHECK(out.at("w").data[i] == static_cast<float>(expect));  // same-order reference
    }
}

TEST_CASE("two opposite vectors cancel") {
    auto t1 = random_tv(9, 64, "a");
    TaskVector t2 = t1;
    t2.specialist_id = "b";
    for (auto& [_, t] : t2.delta.entries()) {
        for (auto& v : t.data) v = -v;
    }
    auto out = linear_combine({&t1, &t2}, {1.0, 1.0});
    for (float v : out.at("w").data) CHECK(v == 0.0f);
}

TEST_CASE("linear_combine is linear within tolerance") {
    auto t1 = random_tv(11, 256, "a");
    auto t2 = random_tv(12, 256, "b");
    auto ab = linear_combine({&t1, &t2}, {0.7 + 0.2, -0.4 + 1.1});
    auto a = linear_combine({&t1, &t2}, {0.7, -0.4});
    auto b = linear_combine({&t1, &t2}, {0.2, 1.1});
    for (size_t i = 0; i < 256; ++i) {
        double sum = static_cast<double>(a.at("w").data[i]) + b.at("w").data[i];
        CHECK(ab.at("w").data[i] == doctest::Approx(sum).epsilon(1e-6));
    }
}

TEST_CASE("base_hash mismatch blocks combination unless forced") {
    auto t1 = random_tv(1, 8, "a");
    auto t2 = random_tv(2, 8, "b");
    t2.base_hash = "different";
    CHECK_THROWS_AS(check_combinable({&t1, &t2}), std::runtime_error);
    CHECK_NOTHROW(check_combinable({&t1, &t2}, /*force=*/true));
}

TEST_CASE("deterministic repeated combine") {
    auto t1 = random_tv(5, 100, "a");
    auto t2 = random_tv(6, 100, "b");
    auto r1 = linear_combine({&t1, &t2}, {0.5, 0.5});
    auto r2 = linear_combine({&t1, &t2}, {0.5, 0.5});
    CHECK(r1 == r2);
}

TEST_CASE("task vector serialization keeps provenance") {
    auto tv = random_tv(21, 16, "G1");
    auto path = std::filesystem::temp_directory_path() / "taskforge_tests" / "tv.st";
    std::filesystem::create_directories(path.parent_path());
    save_task_vector(tv, path.string());
    auto back = load_task_vector(path.string());
    CHECK(back.specialist_id == "G1");
    CHECK(back.base_hash == tv.base_hash);
    CHECK(back.delta == tv.delta);
}

TEST_CASE("glob matching") {
    CHECK(glob_match("head.*", "head.weight"));
    CHECK(glob_match("*.bias", "layers.0.bias"));
    CHECK(!glob_match("head.*", "encoder.head"));
    CHECK(glob_match("enc?der.*", "encoder.w"));
}
