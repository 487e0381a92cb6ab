// taskforge: checkpoint arithmetic, merging, geometry, connectivity,
// spectral fingerprints, and statistics from one binary.
//
// Every report is JSON or CSV; stdout carries human-readable tables only.
// Reports embed the tool version, a hash of the invocation, and all seeds
// so a bundle documents how it was produced. Reruns with identical inputs
// and seeds are byte-identical; wall-clock stamps go to a sidecar file.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "taskforge/checkpoint.hpp"
#include "taskforge/geometry.hpp"
#include "taskforge/lmc.hpp"
#include "taskforge/merge.hpp"
#include "taskforge/probes.hpp"
#include "taskforge/sha256.hpp"
#include "taskforge/spectral.hpp"
#include "taskforge/stats.hpp"
#include "taskforge/synth.hpp"
#include "taskforge/task_vector.hpp"
#include "taskforge/wav.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace taskforge;

#ifndef TASKFORGE_VERSION
#define TASKFORGE_VERSION "0.0.0"
#endif

namespace {

struct GlobalOpts {
    uint64_t seed = 42;
    int threads = 0;  // 0: library default
    bool strict = true;
    std::string invocation_hash;  // sha256 of the reconstructed command line
};

GlobalOpts g_opts;

json provenance() {
    json p;
    p["tool"] = "taskforge";
    p["version"] = TASKFORGE_VERSION;
    p["invocation_hash"] = g_opts.invocation_hash;
    p["seed"] = g_opts.seed;
    return p;
}

void write_text(const std::string& path, const std::string& body) {
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << body;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_json(const std::string& path, const json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

void write_sidecar(const std::string& report_path) {
    auto now = std::chrono::system_clock::now();
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch());
    write_text(report_path + ".run",
               "written_unix_seconds=" + std::to_string(secs.count()) + "\n");
}

LoadOptions load_opts() {
    LoadOptions o;
    o.strict_finite = g_opts.strict;
    return o;
}

// Expands 'dir/*.st'-style patterns; literal paths pass through. Results
// are sorted so downstream reports are order-stable.
std::vector<std::string> expand_globs(const std::vector<std::string>& patterns) {
    std::vector<std::string> out;
    for (const auto& pat : patterns) {
        if (pat.find('*') == std::string::npos && pat.find('?') == std::string::npos) {
            out.push_back(pat);
            continue;
        }
        fs::path p(pat);
        fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
        std::string leaf = p.filename().string();
        std::vector<std::string> hits;
        if (fs::is_directory(dir)) {
            for (const auto& e : fs::directory_iterator(dir)) {
                if (e.is_regular_file() && glob_match(leaf, e.path().filename().string())) {
                    hits.push_back(e.path().string());
                }
            }
        }
        std::sort(hits.begin(), hits.end());
        if (hits.empty()) throw std::runtime_error("pattern '" + pat + "' matched no files");
        out.insert(out.end(), hits.begin(), hits.end());
    }
    return out;
}

// Parses 'start:stop:step' into an inclusive ascending grid.
std::vector<double> parse_grid(const std::string& s) {
    double start = 0, stop = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0) {
        throw std::runtime_error("bad grid '" + s + "', expected start:stop:step");
    }
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        double v = start + i * step;
        if (v > stop + 1e-12) break;
        grid.push_back(std::min(v, stop));
    }
    if (grid.empty() || std::abs(grid.back() - stop) > 1e-9) grid.push_back(stop);
    return grid;
}

std::vector<double> parse_csv_doubles(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    Csv csv;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        if (first) {
            csv.header = fields;
            first = false;
        } else {
            csv.rows.push_back(fields);
        }
    }
    return csv;
}

size_t csv_column(const Csv& csv, const std::string& name) {
    for (size_t i = 0; i < csv.header.size(); ++i) {
        if (csv.header[i] == name) return i;
    }
    throw std::runtime_error("column '" + name + "' not found");
}

std::vector<bool> read_bool_column(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::vector<bool> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            out.push_back(std::stod(line) != 0.0);
        } catch (const std::exception&) {
            // tolerate a single header line
            if (!out.empty()) throw std::runtime_error("bad value '" + line + "' in " + path);
        }
    }
    if (out.empty()) throw std::runtime_error("no values in '" + path + "'");
    return out;
}

json merge_report_json(const MergeReport& rep) {
    json j;
    j["provenance"] = provenance();
    j["strategy"] = rep.strategy;
    j["params"] = {{"lambda", rep.spec.lambda},
                   {"drop_rate", rep.spec.drop_rate},
                   {"trim_fraction", rep.spec.trim_fraction},
                   {"gamma", rep.spec.gamma},
                   {"beta", rep.spec.beta},
                   {"base_seed", rep.spec.base_seed},
                   {"seed_policy",
                    rep.spec.seed_policy == SeedPolicy::ByName ? "by-name" : "by-index"},
                   {"trim_per_tensor", rep.spec.trim_per_tensor},
                   {"della_global_max", rep.spec.della_global_max}};
    j["vector_ids"] = rep.vector_ids;
    j["retained_fraction"] = rep.retained_fraction;
    j["sign_conflicts"] = rep.sign_conflicts;
    j["elected_positive"] = rep.elected_positive;
    j["elected_negative"] = rep.elected_negative;
    j["elected_zero"] = rep.elected_zero;
    j["weights_renormalized"] = rep.weights_renormalized;
    return j;
}

json geometry_report_json(const GeometryReport& g, const LayerReport& layers) {
    json j;
    j["provenance"] = provenance();
    j["vector_ids"] = g.vector_ids;
    j["cosine"] = g.cosine;
    j["sign_agreement"] = g.sign_agreement;
    j["l2_norms"] = g.l2_norms;
    j["mean_abs"] = g.mean_abs;
    j["sparsity"] = g.sparsity;
    j["sparsity_threshold"] = g.threshold;
    j["layer_labels"] = layers.layer_labels;
    j["per_layer_norms"] = layers.per_layer_norms;
    j["per_layer_mean_cosine"] = layers.per_layer_mean_cosine;
    return j;
}

std::vector<TaskVector> load_vectors(const std::vector<std::string>& patterns) {
    std::vector<TaskVector> tvs;
    for (const auto& path : expand_globs(patterns)) {
        tvs.push_back(load_task_vector(path, load_opts()));
        if (tvs.back().specialist_id.empty()) {
            tvs.back().specialist_id = fs::path(path).stem().string();
        }
    }
    return tvs;
}

std::vector<const TaskVector*> pointers(const std::vector<TaskVector>& tvs) {
    std::vector<const TaskVector*> p;
    for (const auto& tv : tvs) p.push_back(&tv);
    return p;
}

// ---------------------------------------------------------------- ckpt --

void cmd_ckpt_inspect(const std::string& path, bool as_json) {
    auto ckpt = load_checkpoint(path, load_opts());
    if (as_json) {
        json j;
        j["model_id"] = ckpt.meta.model_id;
        j["config_hash"] = ckpt.meta.config_hash;
        j["tensor_count"] = ckpt.tensors.size();
        j["total_elements"] = ckpt.tensors.total_elements();
        json tensors = json::object();
        for (const auto& [name, t] : ckpt.tensors.entries()) tensors[name] = t.shape;
        j["tensors"] = tensors;
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::cout << "model_id:     " << ckpt.meta.model_id << "\n"
              << "config_hash:  " << ckpt.meta.config_hash << "\n"
              << "tensors:      " << ckpt.tensors.size() << "\n"
              << "elements:     " << ckpt.tensors.total_elements() << "\n";
    for (const auto& [name, t] : ckpt.tensors.entries()) {
        std::cout << "  " << name << "  [";
        for (size_t i = 0; i < t.shape.size(); ++i) {
            std::cout << (i ? ", " : "") << t.shape[i];
        }
        std::cout << "]\n";
    }
}

void cmd_ckpt_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::cout << config_hash(body) << "\n";
}

// ------------------------------------------------------------------ tv --

void cmd_tv_extract(const std::string& base_path, const std::string& spec_path,
                    const std::vector<std::string>& exclude, const std::string& id,
                    const std::string& out) {
    auto base = load_checkpoint(base_path, load_opts());
    auto spec = load_checkpoint(spec_path, load_opts());
    auto tv = extract(base, spec, exclude, id);
    save_task_vector(tv, out);
    std::cout << "wrote " << out << " (" << tv.delta.size() << " tensors, |tau| = "
              << l2_norm(tv.delta) << ")\n";
}

void cmd_tv_apply(const std::string& base_path, const std::string& tv_path, double scale,
                  const std::string& id, const std::string& out) {
    auto base = load_checkpoint(base_path, load_opts());
    auto tv = load_task_vector(tv_path, load_opts());
    auto ckpt = apply(base, tv.delta, scale);
    if (!id.empty()) ckpt.meta.model_id = id;
    save_checkpoint(ckpt, out);
    std::cout << "wrote " << out << "\n";
}

// --------------------------------------------------------------- merge --

MergeSpec build_spec(const std::string& strategy, double lambda, double p, double k,
                     double gamma, double beta, const std::string& policy, bool per_tensor,
                     bool global_max) {
    MergeSpec spec;
    spec.strategy = strategy_from_string(strategy);
    spec.lambda = lambda;
    spec.drop_rate = p;
    spec.trim_fraction = k;
    spec.gamma = gamma;
    spec.beta = beta;
    spec.base_seed = g_opts.seed;
    spec.seed_policy = policy == "by-index" ? SeedPolicy::ByIndex : SeedPolicy::ByName;
    spec.trim_per_tensor = per_tensor;
    spec.della_global_max = global_max;
    return spec;
}

void run_one_merge(const std::vector<const TaskVector*>& ptrs, const MergeSpec& spec,
                   const std::string& base_path, const std::string& out,
                   const std::string& report_path) {
    MergeReport rep;
    TensorMap merged = merge(ptrs, spec, &rep);

    Checkpoint result;
    if (!base_path.empty()) {
        auto base = load_checkpoint(base_path, load_opts());
        result = apply(base, merged, 1.0);
        result.meta.model_id = "merged:" + rep.strategy;
    } else {
        result.tensors = merged;
        result.meta.model_id = "merged:" + rep.strategy;
        result.meta.extra["kind"] = "raw-merged-delta";
    }
    save_checkpoint(result, out);
    if (!report_path.empty()) {
        write_json(report_path, merge_report_json(rep));
        write_sidecar(report_path);
    }
    std::cout << "wrote " << out << " [" << rep.strategy << "]\n";
}

void cmd_merge(const std::vector<std::string>& tv_patterns, const std::string& strategy,
               double lambda, double p, double k, double gamma, double beta,
               const std::string& policy, bool per_tensor, bool global_max, bool force,
               const std::string& base_path, const std::string& out,
               const std::string& report_path, const std::string& sweep) {
    auto tvs = load_vectors(tv_patterns);
    auto ptrs = pointers(tvs);
    check_combinable(ptrs, force);

    if (strategy == "negation") {
        if (base_path.empty() || tvs.size() != 1) {
            throw std::runtime_error("negation needs --base and exactly one --tv");
        }
        auto base = load_checkpoint(base_path, load_opts());
        auto grid = sweep.empty() ? std::vector<double>{beta}
                                  : parse_grid(sweep.substr(sweep.find('=') + 1));
        auto negated = negate_domain(base, tvs[0], grid);
        fs::path out_path(out);
        for (size_t i = 0; i < grid.size(); ++i) {
            std::ostringstream tag;
            tag << "beta_" << grid[i];
            auto path = grid.size() == 1
                            ? out
                            : (out_path.parent_path() /
                               (out_path.stem().string() + "." + tag.str() +
                                out_path.extension().string()))
                                  .string();
            save_checkpoint(negated[i], path);
            std::cout << "wrote " << path << "\n";
        }
        return;
    }

    if (sweep.empty()) {
        auto spec = build_spec(strategy, lambda, p, k, gamma, beta, policy, per_tensor,
                               global_max);
        run_one_merge(ptrs, spec, base_path, out, report_path);
        return;
    }

    auto eq = sweep.find('=');
    if (eq == std::string::npos) {
        throw std::runtime_error("bad --sweep, expected param=start:stop:step");
    }
    std::string param = sweep.substr(0, eq);
    auto grid = parse_grid(sweep.substr(eq + 1));
    fs::path out_path(out);
    for (double v : grid) {
        double lv = lambda, pv = p, kv = k, gv = gamma, bv = beta;
        if (param == "lambda") {
            lv = v;
        } else if (param == "p") {
            pv = v;
        } else if (param == "k") {
            kv = v;
        } else if (param == "gamma") {
            gv = v;
        } else if (param == "beta") {
            bv = v;
        } else {
            throw std::runtime_error("unknown sweep parameter '" + param + "'");
        }
        std::ostringstream tag;
        tag << param << "_" << v;
        auto stem = out_path.stem().string() + "." + tag.str();
        auto one_out = (out_path.parent_path() / (stem + out_path.extension().string())).string();
        std::string one_report =
            report_path.empty() ? "" : report_path + "." + tag.str() + ".json";
        auto spec = build_spec(strategy, lv, pv, kv, gv, bv, policy, per_tensor, global_max);
        run_one_merge(ptrs, spec, base_path, one_out, one_report);
    }
}

// ---------------------------------------------------------------- geom --

void cmd_geom(const std::vector<std::string>& tv_patterns, const std::string& report_path,
              const std::string& layer_pattern, double threshold) {
    auto tvs = load_vectors(tv_patterns);
    std::vector<const TensorMap*> maps;
    std::vector<std::string> ids;
    for (const auto& tv : tvs) {
        maps.push_back(&tv.delta);
        ids.push_back(tv.specialist_id);
    }
    auto g = geometry_report(maps, ids, threshold);
    auto layers = per_layer_report(maps, layer_pattern);
    write_json(report_path, geometry_report_json(g, layers));
    write_sidecar(report_path);

    std::cout << "pairwise cosine\n";
    for (size_t i = 0; i < ids.size(); ++i) {
        std::cout << "  " << ids[i];
        for (size_t j = 0; j < ids.size(); ++j) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), " %+.4f", g.cosine[i][j]);
            std::cout << buf;
        }
        std::cout << "  |tau| = " << g.l2_norms[i] << "\n";
    }
    std::cout << "wrote " << report_path << "\n";
}

void cmd_pca(const std::vector<std::string>& ckpt_patterns, const std::string& out,
             int components) {
    std::vector<Checkpoint> ckpts;
    std::vector<std::string> ids;
    for (const auto& path : expand_globs(ckpt_patterns)) {
        ckpts.push_back(load_checkpoint(path, load_opts()));
        ids.push_back(ckpts.back().meta.model_id.empty() ? fs::path(path).stem().string()
                                                         : ckpts.back().meta.model_id);
    }
    std::vector<const TensorMap*> maps;
    for (const auto& c : ckpts) maps.push_back(&c.tensors);
    if (components <= 0) components = static_cast<int>(maps.size()) - 1;
    auto rep = checkpoint_pca(maps, ids, components);

    std::ostringstream csv;
    csv << "id";
    for (int c = 0; c < components; ++c) csv << ",pc" << c + 1;
    csv << "\n";
    for (size_t i = 0; i < ids.size(); ++i) {
        csv << ids[i];
        for (double v : rep.coordinates[i]) csv << "," << v;
        csv << "\n";
    }
    csv << "explained_variance_ratio";
    for (double v : rep.explained_variance_ratio) csv << "," << v;
    csv << "\n";
    write_text(out, csv.str());
    std::cout << "wrote " << out << " (effective rank " << rep.effective_rank << ")\n";
}

// ----------------------------------------------------------------- lmc --

void cmd_lmc_interp(const std::string& a_path, const std::string& b_path,
                    const std::string& alphas_spec, const std::string& outdir) {
    auto a = load_checkpoint(a_path, load_opts());
    auto b = load_checkpoint(b_path, load_opts());
    auto alphas = parse_grid(alphas_spec);
    fs::create_directories(outdir);
    interpolate_streamed(a, b, alphas, [&](double alpha, const Checkpoint& c) {
        char name[64];
        std::snprintf(name, sizeof(name), "alpha_%.4f.safetensors", alpha);
        save_checkpoint(c, (fs::path(outdir) / name).string());
    });
    std::cout << "wrote " << alphas.size() << " checkpoints to " << outdir << "\n";
}

void cmd_lmc_barrier(const std::string& losses_csv) {
    auto csv = read_csv(losses_csv);
    size_t ai = csv_column(csv, "alpha");
    size_t li = csv_column(csv, "loss");
    std::vector<std::pair<double, double>> rows;
    for (const auto& r : csv.rows) rows.emplace_back(std::stod(r[ai]), std::stod(r[li]));
    std::sort(rows.begin(), rows.end());
    std::vector<double> losses;
    for (const auto& [_, l] : rows) losses.push_back(l);
    std::cout << "barrier " << barrier(losses) << "\n";
}

// ------------------------------------------------------------ spectral --

void cmd_spectral_profile(const std::string& glob, const std::string& group,
                          const std::string& out, int sample, int n_mels) {
    auto paths = expand_globs({glob});
    if (sample > 0 && static_cast<size_t>(sample) < paths.size()) {
        // seeded uniform subsample, order-stable
        std::mt19937_64 rng(g_opts.seed);
        std::shuffle(paths.begin(), paths.end(), rng);
        paths.resize(static_cast<size_t>(sample));
        std::sort(paths.begin(), paths.end());
    }
    MelConfig cfg;
    cfg.n_mels = n_mels;
    std::vector<AudioBuffer> clips;
    for (const auto& p : paths) {
        auto clip = read_wav(p);
        if (clip.sample_rate != cfg.sample_rate) clip = resample_linear(clip, cfg.sample_rate);
        clips.push_back(std::move(clip));
    }
    auto prof = mel_profile(clips, group, cfg);
    prof.sample_seed = g_opts.seed;

    json j;
    j["provenance"] = provenance();
    j["group_id"] = prof.group_id;
    j["clip_count"] = prof.clip_count;
    j["sample_rate"] = prof.sample_rate;
    j["sample_seed"] = prof.sample_seed;
    j["profile"] = prof.profile;
    write_json(out, j);
    write_sidecar(out);
    std::cout << "wrote " << out << " (" << clips.size() << " clips)\n";
}

SpectralProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    json j = json::parse(in);
    SpectralProfile p;
    p.group_id = j.value("group_id", fs::path(path).stem().string());
    p.profile = j.at("profile").get<std::vector<double>>();
    p.clip_count = j.value("clip_count", 0);
    return p;
}

void cmd_spectral_dist(const std::vector<std::string>& profile_patterns,
                       const std::string& metric, const std::string& out, double log_base) {
    std::vector<SpectralProfile> profiles;
    for (const auto& p : expand_globs(profile_patterns)) profiles.push_back(load_profile(p));
    if (profiles.size() < 2) throw std::runtime_error("need at least two profiles");

    std::ostringstream csv;
    csv << "a,b," << metric << "\n";
    for (size_t i = 0; i < profiles.size(); ++i) {
        for (size_t j = i + 1; j < profiles.size(); ++j) {
            double d = 0.0;
            if (metric == "jsd") {
                d = jsd(profiles[i], profiles[j], log_base);
            } else if (metric == "l2") {
                d = l2_distance(profiles[i], profiles[j], false);
            } else if (metric == "l2c") {
                d = l2_distance(profiles[i], profiles[j], true);
            } else {
                throw std::runtime_error("unknown metric '" + metric + "'");
            }
            csv << profiles[i].group_id << "," << profiles[j].group_id << "," << d << "\n";
        }
    }
    write_text(out, csv.str());
    std::cout << "wrote " << out << "\n";
}

// --------------------------------------------------------------- stats --

void cmd_stats_spearman(const std::string& csv_path, const std::string& xcol,
                        const std::string& ycol, int64_t n_perm, bool exhaustive) {
    auto csv = read_csv(csv_path);
    size_t xi = csv_column(csv, xcol);
    size_t yi = csv_column(csv, ycol);
    PairedSeries s;
    for (const auto& r : csv.rows) {
        s.x.push_back(std::stod(r[xi]));
        s.y.push_back(std::stod(r[yi]));
    }
    auto res = permutation_test(s, n_perm, g_opts.seed, exhaustive);
    json j;
    j["provenance"] = provenance();
    j["n"] = s.x.size();
    j["rho"] = res.rho;
    j["p_two_sided"] = res.p_two_sided;
    j["n_permutations"] = res.n_permutations;
    j["exhaustive"] = res.exhaustive;
    std::cout << j.dump(2) << "\n";
}

void cmd_stats_bootstrap(const std::string& a_path, const std::string& b_path, int64_t n_boot,
                         double level) {
    auto a = read_bool_column(a_path);
    auto b = read_bool_column(b_path);
    auto ci = paired_bootstrap_ci(a, b, n_boot, level, g_opts.seed);
    json j;
    j["provenance"] = provenance();
    j["n"] = a.size();
    j["delta"] = ci.delta;
    j["ci_lo"] = ci.lo;
    j["ci_hi"] = ci.hi;
    j["level"] = level;
    std::cout << j.dump(2) << "\n";
}

// --------------------------------------------------------------- probe --

FeatureSet load_features(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
        return load_feature_csv(path);
    }
    return load_feature_set(path);
}

json model_to_json(const ProbeModel& m) {
    json j;
    j["provenance"] = provenance();
    j["num_classes"] = m.weights.rows();
    j["dim"] = m.weights.cols();
    json w = json::array();
    for (Eigen::Index c = 0; c < m.weights.rows(); ++c) {
        json row = json::array();
        for (Eigen::Index d = 0; d < m.weights.cols(); ++d) row.push_back(m.weights(c, d));
        w.push_back(row);
    }
    j["weights"] = w;
    json b = json::array();
    for (Eigen::Index c = 0; c < m.bias.size(); ++c) b.push_back(m.bias(c));
    j["bias"] = b;
    j["epoch_losses"] = m.epoch_losses;
    return j;
}

ProbeModel model_from_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    json j = json::parse(in);
    ProbeModel m;
    auto w = j.at("weights");
    auto rows = static_cast<Eigen::Index>(w.size());
    auto cols = static_cast<Eigen::Index>(w.at(0).size());
    m.weights.resize(rows, cols);
    for (Eigen::Index c = 0; c < rows; ++c) {
        for (Eigen::Index d = 0; d < cols; ++d) m.weights(c, d) = w.at(c).at(d).get<double>();
    }
    auto b = j.at("bias");
    m.bias.resize(static_cast<Eigen::Index>(b.size()));
    for (Eigen::Index c = 0; c < m.bias.size(); ++c) m.bias(c) = b.at(c).get<double>();
    return m;
}

void cmd_probe_train(const std::string& features, const std::string& model_out, double lr,
                     int epochs, int batch) {
    auto train = load_features(features);
    ProbeConfig cfg;
    cfg.lr = lr;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.seed = g_opts.seed;
    auto model = train_linear_probe(train, cfg);
    write_json(model_out, model_to_json(model));
    write_sidecar(model_out);
    std::cout << "final epoch loss " << model.epoch_losses.back() << ", wrote " << model_out
              << "\n";
}

void cmd_probe_eval(const std::string& features, const std::string& model_path) {
    auto test = load_features(features);
    auto model = model_from_json(model_path);
    auto res = evaluate(model, test);
    std::cout << "accuracy " << res.accuracy << " on " << test.size() << " examples\n";
}

void cmd_probe_knn(const std::string& train_path, const std::string& test_path) {
    auto train = load_features(train_path);
    auto test = load_features(test_path);
    auto res = knn_classify(train, test, 1, g_opts.strict);
    std::cout << "accuracy " << res.accuracy << " on " << test.size() << " examples\n";
}

void cmd_probe_gap(const std::string& joint_path, const std::string& merged_path,
                   int64_t n_boot) {
    auto joint = read_bool_column(joint_path);
    auto merged = read_bool_column(merged_path);
    auto gap = composition_gap(joint, merged, n_boot, g_opts.seed);
    json j;
    j["provenance"] = provenance();
    j["gap"] = gap.gap;
    j["ci_lo"] = gap.ci.lo;
    j["ci_hi"] = gap.ci.hi;
    std::cout << j.dump(2) << "\n";
}

// --------------------------------------------------------------- synth --

void cmd_synth(const std::string& mode, int n, int64_t dim, const std::string& norms,
               double cosine, double sparsity, const std::string& outdir,
               const std::string& verify_out) {
    SynthSpec spec;
    spec.n_vectors = n;
    spec.dim = dim;
    spec.seed = g_opts.seed;
    spec.target_cosine = cosine;
    spec.sparsity = sparsity;
    if (!norms.empty()) spec.target_norms = parse_csv_doubles(norms);
    if (mode == "disjoint") {
        spec.support_mode = SupportMode::DisjointSupport;
    } else if (mode == "gaussian") {
        spec.support_mode = SupportMode::RandomGaussian;
    } else if (mode == "cosine") {
        spec.support_mode = SupportMode::ControlledCosine;
    } else {
        throw std::runtime_error("unknown mode '" + mode + "'");
    }

    auto tvs = generate(spec);
    fs::create_directories(outdir);
    for (size_t i = 0; i < tvs.size(); ++i) {
        auto path = (fs::path(outdir) / (tvs[i].specialist_id + ".safetensors")).string();
        save_task_vector(tvs[i], path);
    }
    std::cout << "wrote " << tvs.size() << " vectors to " << outdir << "\n";

    if (!verify_out.empty()) {
        auto rep = verify_predictions(pointers(tvs));
        json j;
        j["provenance"] = provenance();
        j["norms"] = rep.norms;
        j["cosine"] = rep.cosine;
        j["sign_agreement"] = rep.sign_agreement;
        j["displacement_actual"] = rep.displacement_actual;
        j["displacement_predicted"] = rep.displacement_predicted;
        j["cross_term_bound"] = rep.cross_term_bound;
        j["trim_grid"] = rep.trim_grid;
        j["discarded_fraction"] = rep.discarded_fraction;
        write_json(verify_out, j);
        write_sidecar(verify_out);
        std::cout << "wrote " << verify_out << "\n";
    }
}

// ------------------------------------------------------------ pipeline --

void cmd_pipeline(const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open '" + config_path + "'");
    json cfg = json::parse(in);

    std::string base_path = cfg.at("base");
    std::string report_dir = cfg.at("report_dir");
    if (cfg.contains("seed")) g_opts.seed = cfg["seed"].get<uint64_t>();
    std::vector<std::string> exclude;
    if (cfg.contains("exclude")) exclude = cfg["exclude"].get<std::vector<std::string>>();
    bool force = cfg.value("force", false);

    if (!fs::exists(base_path)) throw std::runtime_error("base '" + base_path + "' missing");
    for (const auto& s : cfg.at("specialists")) {
        std::string p = s.at("path");
        if (!fs::exists(p)) throw std::runtime_error("specialist '" + p + "' missing");
    }
    if (cfg.at("strategies").empty()) throw std::runtime_error("strategy list is empty");

    fs::create_directories(report_dir);
    auto base = load_checkpoint(base_path, load_opts());

    // stage 1: extraction
    std::vector<TaskVector> tvs;
    for (const auto& s : cfg.at("specialists")) {
        auto spec = load_checkpoint(s.at("path").get<std::string>(), load_opts());
        tvs.push_back(extract(base, spec, exclude, s.value("id", "")));
    }
    auto ptrs = pointers(tvs);
    check_combinable(ptrs, force);

    // stage 2: merges
    struct Row {
        std::string name;
        double retained = 1.0;
        int64_t conflicts = 0;
    };
    std::vector<Row> table;
    for (const auto& strat : cfg.at("strategies")) {
        std::string name = strat.at("name");
        auto spec = build_spec(name, strat.value("lambda", 1.0), strat.value("p", 0.0),
                               strat.value("k", 0.0), strat.value("gamma", 0.0),
                               strat.value("beta", 1.0), strat.value("seed_policy", "by-name"),
                               strat.value("trim_per_tensor", false),
                               strat.value("della_global_max", false));
        MergeReport rep;
        TensorMap merged = merge(ptrs, spec, &rep);
        auto out_ckpt = apply(base, merged, 1.0);
        out_ckpt.meta.model_id = "merged:" + name;
        save_checkpoint(out_ckpt, (fs::path(report_dir) / ("merged_" + name + ".safetensors"))
                                      .string());
        write_json((fs::path(report_dir) / ("merge_" + name + ".json")).string(),
                   merge_report_json(rep));
        double mean_ret = 0.0;
        for (double r : rep.retained_fraction) mean_ret += r;
        if (!rep.retained_fraction.empty()) mean_ret /= rep.retained_fraction.size();
        table.push_back({name, mean_ret, rep.sign_conflicts});
    }

    // stage 3: geometry
    std::vector<const TensorMap*> maps;
    std::vector<std::string> ids;
    for (const auto& tv : tvs) {
        maps.push_back(&tv.delta);
        ids.push_back(tv.specialist_id);
    }
    auto g = geometry_report(maps, ids, cfg.value("sparsity_threshold", 1e-3));
    auto layers = per_layer_report(maps, cfg.value("layer_pattern",
                                                   std::string(R"(\.layers\.(\d+)\.)")));
    write_json((fs::path(report_dir) / "geometry.json").string(),
               geometry_report_json(g, layers));
    write_sidecar((fs::path(report_dir) / "geometry.json").string());

    std::cout << "strategy            retained  sign_conflicts\n";
    for (const auto& row : table) {
        std::printf("%-20s %8.4f %15lld\n", row.name.c_str(), row.retained,
                    static_cast<long long>(row.conflicts));
    }
    std::cout << "reports in " << report_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"checkpoint arithmetic, merging, geometry, and statistics"};
    app.set_version_flag("--version", TASKFORGE_VERSION);
    app.require_subcommand(1);

    {
        std::string joined;
        for (int i = 1; i < argc; ++i) {
            joined += argv[i];
            joined += '\x1f';
        }
        g_opts.invocation_hash = sha256_hex(joined);
    }

    app.add_option("--seed", g_opts.seed, "base seed for all stochastic operations");
    app.add_option("--threads", g_opts.threads, "worker thread cap (0 = library default)");
    app.add_flag("--strict,!--no-strict", g_opts.strict,
                 "reject NaN/Inf payloads and zero-norm rows");

    // ckpt
    auto* ckpt = app.add_subcommand("ckpt", "checkpoint utilities");
    ckpt->require_subcommand(1);
    std::string ckpt_path;
    bool ckpt_json = false;
    auto* inspect = ckpt->add_subcommand("inspect", "print manifest and metadata");
    inspect->add_option("path", ckpt_path)->required();
    inspect->add_flag("--json", ckpt_json, "emit JSON instead of a table");
    inspect->callback([&] { cmd_ckpt_inspect(ckpt_path, ckpt_json); });
    std::string hash_path;
    auto* hash = ckpt->add_subcommand("hash", "hash of a canonical config document");
    hash->add_option("path", hash_path)->required();
    hash->callback([&] { cmd_ckpt_hash(hash_path); });

    // tv
    auto* tv = app.add_subcommand("tv", "task-vector operations");
    tv->require_subcommand(1);
    std::string tv_base, tv_spec, tv_out, tv_id, tv_file;
    std::vector<std::string> tv_exclude;
    double tv_scale = 1.0;
    auto* tvx = tv->add_subcommand("extract", "specialist minus base");
    tvx->add_option("--base", tv_base)->required();
    tvx->add_option("--spec", tv_spec)->required();
    tvx->add_option("--exclude", tv_exclude, "name globs to drop before differencing");
    tvx->add_option("--id", tv_id, "specialist id override");
    tvx->add_option("-o,--output", tv_out)->required();
    tvx->callback([&] { cmd_tv_extract(tv_base, tv_spec, tv_exclude, tv_id, tv_out); });
    auto* tva = tv->add_subcommand("apply", "base plus scaled vector");
    tva->add_option("--base", tv_base)->required();
    tva->add_option("--tv", tv_file)->required();
    tva->add_option("--scale", tv_scale);
    tva->add_option("--id", tv_id, "model id for the result");
    tva->add_option("-o,--output", tv_out)->required();
    tva->callback([&] { cmd_tv_apply(tv_base, tv_file, tv_scale, tv_id, tv_out); });

    // merge
    auto* mg = app.add_subcommand("merge", "combine task vectors");
    std::vector<std::string> mg_tvs;
    std::string mg_strategy = "average", mg_base, mg_out, mg_report, mg_sweep;
    std::string mg_policy = "by-name";
    double mg_lambda = 1.0, mg_p = 0.0, mg_k = 0.0, mg_gamma = 0.0, mg_beta = 1.0;
    bool mg_per_tensor = false, mg_global_max = false, mg_force = false;
    mg->add_option("--tv", mg_tvs, "task-vector files or globs")->required();
    mg->add_option("--strategy", mg_strategy,
                   "average|arithmetic|dare|ties|dare-ties|della|norm-adjusted");
    mg->add_option("--lambda", mg_lambda);
    mg->add_option("--p", mg_p, "drop rate");
    mg->add_option("--k", mg_k, "trim fraction");
    mg->add_option("--gamma", mg_gamma, "inverse-norm weighting exponent");
    mg->add_option("--beta", mg_beta, "negation strength");
    mg->add_option("--seed-policy", mg_policy, "by-name|by-index");
    mg->add_flag("--per-tensor-trim", mg_per_tensor);
    mg->add_flag("--della-global-max", mg_global_max);
    mg->add_flag("--force", mg_force, "combine despite base_hash mismatch");
    mg->add_option("--base", mg_base, "apply the merged delta to this checkpoint");
    mg->add_option("-o,--output", mg_out)->required();
    mg->add_option("--report", mg_report, "merge report JSON path");
    mg->add_option("--sweep", mg_sweep, "param=start:stop:step grid, one output per point");
    mg->callback([&] {
        cmd_merge(mg_tvs, mg_strategy, mg_lambda, mg_p, mg_k, mg_gamma, mg_beta, mg_policy,
                  mg_per_tensor, mg_global_max, mg_force, mg_base, mg_out, mg_report, mg_sweep);
    });

    // geom
    auto* gm = app.add_subcommand("geom", "pairwise geometry report");
    std::vector<std::string> gm_tvs;
    std::string gm_report, gm_pattern = R"(\.layers\.(\d+)\.)";
    double gm_threshold = 1e-3;
    gm->add_option("--tv", gm_tvs)->required();
    gm->add_option("--report", gm_report)->required();
    gm->add_option("--layer-pattern", gm_pattern, "regex with one numeric capture");
    gm->add_option("--threshold", gm_threshold, "sparsity threshold");
    gm->callback([&] { cmd_geom(gm_tvs, gm_report, gm_pattern, gm_threshold); });

    // pca
    auto* pc = app.add_subcommand("pca", "low-rank map of checkpoints");
    std::vector<std::string> pc_ckpts;
    std::string pc_out;
    int pc_components = 0;
    pc->add_option("--ckpt", pc_ckpts)->required();
    pc->add_option("-o,--output", pc_out)->required();
    pc->add_option("--components", pc_components, "0 = point count minus one");
    pc->callback([&] { cmd_pca(pc_ckpts, pc_out, pc_components); });

    // lmc
    auto* lm = app.add_subcommand("lmc", "linear interpolation analysis");
    lm->require_subcommand(1);
    std::string lm_a, lm_b, lm_alphas = "0:1:0.1", lm_outdir, lm_losses;
    auto* lmi = lm->add_subcommand("interp", "write interpolated checkpoints");
    lmi->add_option("--a", lm_a)->required();
    lmi->add_option("--b", lm_b)->required();
    lmi->add_option("--alphas", lm_alphas, "start:stop:step");
    lmi->add_option("--outdir", lm_outdir)->required();
    lmi->callback([&] { cmd_lmc_interp(lm_a, lm_b, lm_alphas, lm_outdir); });
    auto* lmb = lm->add_subcommand("barrier", "barrier from an alpha,loss CSV");
    lmb->add_option("--losses", lm_losses)->required();
    lmb->callback([&] { cmd_lmc_barrier(lm_losses); });

    // spectral
    auto* sp = app.add_subcommand("spectral", "log-mel fingerprints and distances");
    sp->require_subcommand(1);
    std::string sp_glob, sp_group, sp_out, sp_metric = "jsd";
    std::vector<std::string> sp_profiles;
    int sp_sample = 0, sp_mels = 128;
    double sp_base = 2.0;
    auto* spp = sp->add_subcommand("profile", "group fingerprint from WAV clips");
    spp->add_option("--glob", sp_glob, "clip path pattern")->required();
    spp->add_option("--group", sp_group)->required();
    spp->add_option("-o,--output", sp_out)->required();
    spp->add_option("--sample", sp_sample, "seeded uniform clip subsample size");
    spp->add_option("--mels", sp_mels);
    spp->callback([&] { cmd_spectral_profile(sp_glob, sp_group, sp_out, sp_sample, sp_mels); });
    auto* spd = sp->add_subcommand("dist", "pairwise distances between profiles");
    spd->add_option("--profiles", sp_profiles)->required();
    spd->add_option("--metric", sp_metric, "jsd|l2|l2c");
    spd->add_option("--log-base", sp_base, "divergence log base");
    spd->add_option("-o,--output", sp_out)->required();
    spd->callback([&] { cmd_spectral_dist(sp_profiles, sp_metric, sp_out, sp_base); });

    // stats
    auto* st = app.add_subcommand("stats", "rank correlation and bootstrap");
    st->require_subcommand(1);
    std::string st_csv, st_x = "x", st_y = "y", st_a, st_b;
    int64_t st_perm = 100000, st_boot = 10000;
    double st_level = 0.95;
    bool st_exhaustive = false;
    auto* sts = st->add_subcommand("spearman", "rank correlation with permutation p");
    sts->add_option("--csv", st_csv)->required();
    sts->add_option("--x", st_x, "x column name");
    sts->add_option("--y", st_y, "y column name");
    sts->add_option("--perm", st_perm, "permutation count");
    sts->add_flag("--exhaustive", st_exhaustive, "enumerate all permutations if feasible");
    sts->callback([&] { cmd_stats_spearman(st_csv, st_x, st_y, st_perm, st_exhaustive); });
    auto* stb = st->add_subcommand("bootstrap", "paired accuracy-difference CI");
    stb->add_option("--a", st_a, "0/1 correctness file")->required();
    stb->add_option("--b", st_b, "0/1 correctness file")->required();
    stb->add_option("--boot", st_boot);
    stb->add_option("--level", st_level);
    stb->callback([&] { cmd_stats_bootstrap(st_a, st_b, st_boot, st_level); });

    // probe
    auto* pr = app.add_subcommand("probe", "linear probe and nearest neighbor");
    pr->require_subcommand(1);
    std::string pr_features, pr_model, pr_train, pr_test, pr_joint, pr_merged;
    double pr_lr = 1e-3;
    int pr_epochs = 10, pr_batch = 256;
    int64_t pr_boot = 10000;
    auto* prt = pr->add_subcommand("train", "fit a linear probe");
    prt->add_option("--features", pr_features)->required();
    prt->add_option("--model", pr_model)->required();
    prt->add_option("--lr", pr_lr);
    prt->add_option("--epochs", pr_epochs);
    prt->add_option("--batch", pr_batch);
    prt->callback([&] { cmd_probe_train(pr_features, pr_model, pr_lr, pr_epochs, pr_batch); });
    auto* pre = pr->add_subcommand("eval", "accuracy of a saved probe");
    pre->add_option("--features", pr_features)->required();
    pre->add_option("--model", pr_model)->required();
    pre->callback([&] { cmd_probe_eval(pr_features, pr_model); });
    auto* prk = pr->add_subcommand("knn", "1-nearest-neighbor accuracy");
    prk->add_option("--train", pr_train)->required();
    prk->add_option("--test", pr_test)->required();
    prk->callback([&] { cmd_probe_knn(pr_train, pr_test); });
    auto* prg = pr->add_subcommand("gap", "accuracy gap with bootstrap CI");
    prg->add_option("--joint", pr_joint)->required();
    prg->add_option("--merged", pr_merged)->required();
    prg->add_option("--boot", pr_boot);
    prg->callback([&] { cmd_probe_gap(pr_joint, pr_merged, pr_boot); });

    // synth
    auto* sy = app.add_subcommand("synth", "synthetic vectors with known geometry");
    std::string sy_mode = "gaussian", sy_norms, sy_outdir, sy_verify;
    int sy_n = 2;
    int64_t sy_dim = 1000;
    double sy_cosine = 0.0, sy_sparsity = 0.0;
    sy->add_option("--mode", sy_mode, "disjoint|gaussian|cosine");
    sy->add_option("--n", sy_n, "vector count");
    sy->add_option("--dim", sy_dim);
    sy->add_option("--norms", sy_norms, "comma-separated target norms");
    sy->add_option("--cosine", sy_cosine, "target pairwise cosine (cosine mode)");
    sy->add_option("--sparsity", sy_sparsity, "zeroed fraction (gaussian mode)");
    sy->add_option("--outdir", sy_outdir)->required();
    sy->add_option("--verify", sy_verify, "prediction report JSON path");
    sy->callback([&] {
        cmd_synth(sy_mode, sy_n, sy_dim, sy_norms, sy_cosine, sy_sparsity, sy_outdir, sy_verify);
    });

    // pipeline
    auto* pl = app.add_subcommand("pipeline", "extract, merge, and analyze a bundle");
    std::string pl_config;
    pl->add_option("--config", pl_config, "pipeline JSON config")->required();
    pl->callback([&] { cmd_pipeline(pl_config); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
