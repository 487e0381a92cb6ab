// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Each check is self-contained and uses only library code
// plus independently computed expectations.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "taskforge/checkpoint.hpp"
#include "taskforge/geometry.hpp"
#include "taskforge/lmc.hpp"
#include "taskforge/merge.hpp"
#include "taskforge/probes.hpp"
#include "taskforge/rng.hpp"
#include "taskforge/sha256.hpp"
#include "taskforge/spectral.hpp"
#include "taskforge/stats.hpp"
#include "taskforge/synth.hpp"
#include "taskforge/task_vector.hpp"

using namespace taskforge;

namespace {

int g_failures = 0;

void run(const std::string& name, const std::function<bool(std::string&)>& fn) {
    std::string detail;
    bool ok = false;
    auto t0 = std::chrono::steady_clock::now();
    try {
        ok = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %-52s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), secs,
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

PairedSeries distance_cosine_pairs() {
    PairedSeries s;
    s.x = {0.001, 0.015, 0.016, 0.028, 0.051, 0.057, 0.266, 0.300, 0.308, 0.337};
    s.y = {0.093, 0.092, 0.085, 0.029, 0.038, 0.039, 0.022, 0.013, 0.022, 0.014};
    return s;
}

TaskVector make_tv(TensorMap delta, const std::string& id) {
    TaskVector tv;
    tv.delta = std::move(delta);
    tv.specialist_id = id;
    tv.base_hash = "acceptance";
    return tv;
}

bool spearman_reproduction(std::string& detail) {
    auto s = distance_cosine_pairs();
    double rho10 = spearman(s);
    auto perm = permutation_test(s, 100000, 42);

    PairedSeries sub = s;
    sub.x.resize(6);
    sub.y.resize(6);
    double rho6 = spearman(sub);

    char buf[128];
    std::snprintf(buf, sizeof(buf), "rho10=%.4f p=%.5f rho6=%.4f", rho10, perm.p_two_sided,
                  rho6);
    detail = buf;
    return std::abs(rho10 - (-0.915)) <= 0.02 && perm.p_two_sided < 0.001 &&
           std::abs(rho6 - (-0.771)) <= 0.005;
}

bool displacement_exactness(std::string& detail) {
    std::vector<double> norms = {13.58, 9.51, 6.86, 1.45, 4.79};
    for (int n : {2, 3, 5}) {
        SynthSpec spec;
        spec.n_vectors = n;
        spec.dim = 100000;
        spec.support_mode = SupportMode::DisjointSupport;
        spec.target_norms.assign(norms.begin(), norms.begin() + n);
        auto tvs = generate(spec);
        std::vector<const TaskVector*> ptrs;
        for (auto& tv : tvs) ptrs.push_back(&tv);
        auto rep = verify_predictions(ptrs, {});
        for (int i = 0; i < n; ++i) {
            double rel = std::abs(rep.displacement_actual[i] - rep.displacement_predicted[i]) /
                         std::max(1e-300, rep.displacement_actual[i]);
            if (rel > 1e-10) {
                detail = "relative error " + std::to_string(rel) + " at N=" +
                         std::to_string(n) + " i=" + std::to_string(i);
                return false;
            }
        }
    }
    return true;
}

bool sign_agreement_half(std::string& detail) {
    SynthSpec spec;
    spec.n_vectors = 2;
    spec.dim = 1000000;
    spec.support_mode = SupportMode::RandomGaussian;
    auto tvs = generate(spec);
    double sigma = sign_agreement(tvs[0].delta, tvs[1].delta);
    detail = "sigma=" + std::to_string(sigma);
    return std::abs(sigma - 0.5) <= 0.0015;
}

bool dare_expectation(std::string& detail) {
    const int64_t d = 10000;
    const double p = 0.9;
    const int trials = 1000;

    TensorMap a, b;
    CounterRng ra(derive_stream_key(7, "dare-acc", "a"));
    CounterRng rb(derive_stream_key(7, "dare-acc", "b"));
    Tensor ta, tb;
    ta.shape = tb.shape = {d};
    ta.data.resize(d);
    tb.data.resize(d);
    for (int64_t i = 0; i < d; ++i) {
        ta.data[i] = static_cast<float>(ra.gaussian(static_cast<uint64_t>(i)));
        tb.data[i] = static_cast<float>(rb.gaussian(static_cast<uint64_t>(i)));
    }
    a.set("w", ta);
    b.set("w", tb);
    auto tv1 = make_tv(a, "s1");
    auto tv2 = make_tv(b, "s2");
    std::vector<const TaskVector*> tvs = {&tv1, &tv2};

    auto avg = merge_simple_average(tvs);
    std::vector<double> acc(d, 0.0);
    for (int t = 0; t < trials; ++t) {
        auto out = merge_dare(tvs, p, 1000 + static_cast<uint64_t>(t));
        const auto& data = out.at("w").data;
        for (int64_t i = 0; i < d; ++i) acc[static_cast<size_t>(i)] += data[i];
    }

    // per-trial variance at coordinate i: ((a^2 + b^2) / 4) * p / (1 - p)
    const auto& da = tv1.delta.at("w").data;
    const auto& db = tv2.delta.at("w").data;
    const auto& mean_ref = avg.at("w").data;
    int64_t within = 0;
    for (int64_t i = 0; i < d; ++i) {
        double var = (static_cast<double>(da[i]) * da[i] + static_cast<double>(db[i]) * db[i]) /
                     4.0 * p / (1.0 - p);
        double se = std::sqrt(var / trials);
        double diff = std::abs(acc[static_cast<size_t>(i)] / trials - mean_ref[i]);
        if (diff <= 3.0 * se) ++within;
    }
    double frac = static_cast<double>(within) / static_cast<double>(d);
    detail = "within-3se fraction=" + std::to_string(frac);
    return frac >= 0.99;
}

bool ties_hand_trace(std::string& detail) {
    auto tv1 = make_tv({}, "s1");
    auto tv2 = make_tv({}, "s2");
    tv1.delta.set("w", Tensor{{3}, {1.0f, -0.2f, 0.5f}});
    tv2.delta.set("w", Tensor{{3}, {-0.9f, 0.1f, 0.6f}});
    auto out = merge_ties({&tv1, &tv2}, 1.0 / 3.0);
    const auto& o = out.at("w").data;
    if (!(o[0] == 1.0f && o[1] == 0.0f && o[2] == 0.55f)) {
        detail = "got [" + std::to_string(o[0]) + ", " + std::to_string(o[1]) + ", " +
                 std::to_string(o[2]) + "]";
        return false;
    }

    SynthSpec spec;
    spec.n_vectors = 3;
    spec.dim = 3000;
    spec.support_mode = SupportMode::DisjointSupport;
    auto tvs = generate(spec);
    std::vector<const TaskVector*> ptrs;
    for (auto& tv : tvs) ptrs.push_back(&tv);
    auto ties0 = merge_ties(ptrs, 0.0);
    auto avg = merge_simple_average(ptrs);
    if (!(ties0 == avg)) {
        detail = "untrimmed election differs from simple average on disjoint supports";
        return false;
    }
    return true;
}

bool lmc_barrier(std::string& detail) {
    if (barrier({1.0, 1.05, 1.1, 1.2}) != 0.0) {
        detail = "monotonic series produced a nonzero barrier";
        return false;
    }
    double h = 0.75;
    std::vector<double> alphas, losses;
    for (int i = 0; i <= 10; ++i) {
        double a = i / 10.0;
        alphas.push_back(a);
        losses.push_back(1.0 + 4.0 * h * a * (1.0 - a));
    }
    if (std::abs(barrier(losses) - h) > 1e-12) {
        detail = "bump barrier != analytic height";
        return false;
    }

    Checkpoint a, b;
    CounterRng rng(derive_stream_key(3, "lmc-acc", "w"));
    Tensor t;
    t.shape = {128};
    t.data.resize(128);
    for (size_t i = 0; i < 128; ++i) t.data[i] = static_cast<float>(rng.gaussian(i));
    a.tensors.set("w", t);
    for (auto& v : t.data) v += 1.0f;
    b.tensors.set("w", t);
    auto path = interpolate(a, b, alphas);
    if (!(path.checkpoints.front().tensors == b.tensors &&
          path.checkpoints.back().tensors == a.tensors)) {
        detail = "endpoints are not bit-exact";
        return false;
    }
    return true;
}

bool checkpoint_io(std::string& detail) {
    Checkpoint c;
    c.meta.model_id = "acceptance-roundtrip";
    c.meta.config_hash = config_hash("{}");
    CounterRng shape_rng(derive_stream_key(9, "io-acc", "shapes"));
    for (int i = 0; i < 250; ++i) {
        Tensor t;
        int64_t rows = 1 + static_cast<int64_t>(shape_rng.uniform(2 * i) * 8);
        int64_t cols = 1 + static_cast<int64_t>(shape_rng.uniform(2 * i + 1) * 8);
        t.shape = {rows, cols};
        t.data.resize(static_cast<size_t>(rows * cols));
        CounterRng rng(derive_stream_key(9, "io-acc", "t" + std::to_string(i)));
        for (size_t e = 0; e < t.data.size(); ++e) t.data[e] = static_cast<float>(rng.gaussian(e));
        c.tensors.set("block." + std::to_string(i) + ".weight", std::move(t));
    }
    auto dir = std::filesystem::temp_directory_path() / "taskforge_acceptance";
    std::filesystem::create_directories(dir);
    auto p1 = (dir / "a.safetensors").string();
    auto p2 = (dir / "b.safetensors").string();
    save_checkpoint(c, p1);
    auto back = load_checkpoint(p1);
    if (!(back.tensors == c.tensors && back.meta.model_id == c.meta.model_id)) {
        detail = "round trip not value-identical";
        return false;
    }
    save_checkpoint(back, p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    if (b1 != b2 || b1.empty()) {
        detail = "re-serialization is not byte-identical";
        return false;
    }

    if (sha256_hex("") != "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855" ||
        sha256_hex("abc") !=
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad") {
        detail = "hash test vectors mismatch";
        return false;
    }
    return true;
}

bool probe_and_knn(std::string& detail) {
    auto train = synthetic_clusters(250, 4, 16, 1.0, 101);
    auto test = synthetic_clusters(250, 4, 16, 1.0, 102);
    auto knn = knn_classify(train, test);
    for (Eigen::Index q = 0; q < test.features.rows(); ++q) {
        double best = -2.0;
        Eigen::Index arg = 0;
        for (Eigen::Index t = 0; t < train.features.rows(); ++t) {
            double num = 0.0, na = 0.0, nb = 0.0;
            for (Eigen::Index e = 0; e < train.features.cols(); ++e) {
                double x = test.features(q, e), y = train.features(t, e);
                num += x * y;
                na += x * x;
                nb += y * y;
            }
            double c = num / (std::sqrt(na) * std::sqrt(nb));
            if (c > best) {
                best = c;
                arg = t;
            }
        }
        bool expect =
            train.labels[static_cast<size_t>(arg)] == test.labels[static_cast<size_t>(q)];
        if (knn.correctness[static_cast<size_t>(q)] != expect) {
            detail = "nearest-neighbor mismatch at query " + std::to_string(q);
            return false;
        }
    }

    auto sep = synthetic_clusters(200, 3, 8, 6.0, 103);
    auto model = train_linear_probe(sep);
    auto res = evaluate(model, sep);
    if (res.accuracy < 0.99) {
        detail = "probe accuracy " + std::to_string(res.accuracy);
        return false;
    }

    auto data = synthetic_clusters(8, 3, 4, 1.5, 104);
    Eigen::MatrixXd x = data.features.cast<double>();
    Eigen::MatrixXd w = Eigen::MatrixXd::Random(3, 4) * 0.3;
    Eigen::VectorXd bv = Eigen::VectorXd::Random(3) * 0.1;
    Eigen::MatrixXd gw;
    Eigen::VectorXd gb;
    probe_loss_and_grad(w, bv, x, data.labels, &gw, &gb);
    double h = 1e-6;
    for (Eigen::Index c = 0; c < 3; ++c) {
        for (Eigen::Index e = 0; e < 4; ++e) {
            Eigen::MatrixXd wp = w, wm = w;
            wp(c, e) += h;
            wm(c, e) -= h;
            double num = (probe_loss_and_grad(wp, bv, x, data.labels) -
                          probe_loss_and_grad(wm, bv, x, data.labels)) /
                         (2.0 * h);
            double rel = std::abs(gw(c, e) - num) / std::max(1e-8, std::abs(num));
            if (rel > 1e-5) {
                detail = "gradient relative error " + std::to_string(rel);
                return false;
            }
        }
    }
    return true;
}

bool spectral_pipeline(std::string& detail) {
    MelConfig cfg;
    AudioBuffer tone;
    tone.sample_rate = cfg.sample_rate;
    tone.samples.resize(static_cast<size_t>(cfg.sample_rate));
    for (size_t i = 0; i < tone.samples.size(); ++i) {
        tone.samples[i] = 0.5f * static_cast<float>(
                                     std::sin(2.0 * 3.14159265358979323846 * 1000.0 * i /
                                              cfg.sample_rate));
    }
    auto prof = mel_profile({tone}, "tone", cfg);
    size_t argmax = 0;
    for (size_t m = 1; m < prof.profile.size(); ++m) {
        if (prof.profile[m] > prof.profile[argmax]) argmax = m;
    }
    size_t oracle = 0;
    double best = 1e18;
    for (int m = 0; m < cfg.n_mels; ++m) {
        double d = std::abs(mel_bin_center_hz(cfg, m) - 1000.0);
        if (d < best) {
            best = d;
            oracle = static_cast<size_t>(m);
        }
    }
    if (std::llabs(static_cast<long long>(argmax) - static_cast<long long>(oracle)) > 1) {
        detail = "tone peaked in bin " + std::to_string(argmax) + ", filterbank says " +
                 std::to_string(oracle);
        return false;
    }

    AudioBuffer tone2 = tone;
    for (size_t i = 0; i < tone2.samples.size(); ++i) {
        tone2.samples[i] = 0.5f * static_cast<float>(
                                      std::sin(2.0 * 3.14159265358979323846 * 4000.0 * i /
                                               cfg.sample_rate));
    }
    auto pb = mel_profile({tone2}, "tone2", cfg);
    if (std::abs(jsd(prof, prof)) > 1e-12) {
        detail = "self-divergence nonzero";
        return false;
    }
    if (std::abs(jsd(prof, pb) - jsd(pb, prof)) > 1e-12) {
        detail = "divergence asymmetric";
        return false;
    }
    if (std::abs(jsd_distributions({1.0, 0.0}, {0.0, 1.0}) - 1.0) > 1e-12) {
        detail = "maximal divergence != 1";
        return false;
    }
    SpectralProfile shifted = prof;
    for (auto& v : shifted.profile) v += 3.25;
    if (l2_distance(prof, shifted, true) > 1e-9) {
        detail = "centered distance not offset-invariant";
        return false;
    }
    return true;
}

bool determinism(std::string& detail) {
    TensorMap a, b;
    CounterRng ra(derive_stream_key(5, "det-acc", "a"));
    CounterRng rb(derive_stream_key(5, "det-acc", "b"));
    Tensor ta, tb;
    ta.shape = tb.shape = {4096};
    ta.data.resize(4096);
    tb.data.resize(4096);
    for (size_t i = 0; i < 4096; ++i) {
        ta.data[i] = static_cast<float>(ra.gaussian(i));
        tb.data[i] = static_cast<float>(rb.gaussian(i));
    }
    a.set("w", ta);
    b.set("w", tb);
    auto tv1 = make_tv(a, "s1");
    auto tv2 = make_tv(b, "s2");
    std::vector<const TaskVector*> tvs = {&tv1, &tv2};

    if (!(merge_dare(tvs, 0.5, 42) == merge_dare(tvs, 0.5, 42))) {
        detail = "dropout merge not reproducible";
        return false;
    }
    if (!(merge_della(tvs, 0.5, 0.1, 42) == merge_della(tvs, 0.5, 0.1, 42))) {
        detail = "magnitude-dropout merge not reproducible";
        return false;
    }
    auto s = distance_cosine_pairs();
    auto pa = permutation_test(s, 20000, 7);
    auto pb2 = permutation_test(s, 20000, 7);
    if (pa.p_two_sided != pb2.p_two_sided) {
        detail = "permutation test not reproducible";
        return false;
    }
    std::vector<bool> u(500), v(500);
    for (size_t i = 0; i < 500; ++i) {
        u[i] = i % 3 != 0;
        v[i] = i % 4 != 0;
    }
    auto c1 = paired_bootstrap_ci(u, v, 5000, 0.95, 11);
    auto c2 = paired_bootstrap_ci(u, v, 5000, 0.95, 11);
    if (c1.lo != c2.lo || c1.hi != c2.hi) {
        detail = "bootstrap not reproducible";
        return false;
    }
    SynthSpec spec;
    spec.n_vectors = 3;
    spec.dim = 1000;
    auto g1 = generate(spec);
    auto g2 = generate(spec);
    for (size_t i = 0; i < 3; ++i) {
        if (!(g1[i].delta == g2[i].delta)) {
            detail = "synthetic generation not reproducible";
            return false;
        }
    }
    return true;
}

}  // namespace

int main() {
    run("rank correlation on the distance/cosine pair table", spearman_reproduction);
    run("displacement prediction exact on disjoint supports", displacement_exactness);
    run("sign agreement of independent vectors near one half", sign_agreement_half);
    run("dropout-rescale merge is unbiased in expectation", dare_expectation);
    run("trim-elect-merge hand trace and untrimmed equivalence", ties_hand_trace);
    run("interpolation barriers: monotone, bump, endpoints", lmc_barrier);
    run("checkpoint container byte-exact round trip + hashes", checkpoint_io);
    run("probe accuracy, gradient check, nearest-neighbor oracle", probe_and_knn);
    run("mel profile peak, divergence axioms, centered distance", spectral_pipeline);
    run("seeded operations are bit-reproducible", determinism);

    std::printf("%d/10 criteria passed\n", 10 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
