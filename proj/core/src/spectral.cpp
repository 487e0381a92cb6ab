#include "taskforge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace taskforge {

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

}  // namespace

void fft_radix2(std::vector<std::complex<double>>& buf) {
    size_t n = buf.size();
    if (n == 0 || (n & (n - 1)) != 0) {
        throw std::invalid_argument("fft size must be a power of two");
    }
    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(buf[i], buf[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        std::complex<double> wn(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (size_t k = 0; k < len / 2; ++k) {
                auto u = buf[i + k];
                auto v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wn;
            }
        }
    }
}

std::vector<std::vector<double>> mel_filterbank(const MelConfig& cfg) {
    int n_bins = cfg.fft_size / 2 + 1;
    double mel_lo = hz_to_mel(cfg.fmin);
    double mel_hi = hz_to_mel(cfg.fmax);
    std::vector<double> centers(cfg.n_mels + 2);
    for (int i = 0; i < cfg.n_mels + 2; ++i) {
        centers[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));
    }
    double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.fft_size;
    std::vector<std::vector<double>> fb(cfg.n_mels, std::vector<double>(n_bins, 0.0));
    for (int m = 0; m < cfg.n_mels; ++m) {
        double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
        double sum = 0.0;
        for (int b = 0; b < n_bins; ++b) {
            double f = b * bin_hz;
            double w = 0.0;
            if (f > lo && f < mid) w = (f - lo) / (mid - lo);
            else if (f == mid) w = 1.0;
            else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
            fb[m][b] = w;
            sum += w;
        }
        if (sum > 0.0) {
            for (auto& w : fb[m]) w /= sum;
        }
    }
    return fb;
}

double mel_bin_center_hz(const MelConfig& cfg, int m) {
    double mel_lo = hz_to_mel(cfg.fmin);
    double mel_hi = hz_to_mel(cfg.fmax);
    return mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 1) / (cfg.n_mels + 1));
}

std::vector<std::vector<double>> log_mel_frames(const AudioBuffer& clip, const MelConfig& cfg) {
    auto fb = mel_filterbank(cfg);
    int n_bins = cfg.fft_size / 2 + 1;

    std::vector<double> window(cfg.window);
    for (int i = 0; i < cfg.window; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / cfg.window);
    }

    std::vector<std::vector<double>> frames;
    if (clip.samples.size() < static_cast<size_t>(cfg.window)) return frames;
    size_t n_frames = (clip.samples.size() - cfg.window) / cfg.hop + 1;
    std::vector<std::complex<double>> buf(static_cast<size_t>(cfg.fft_size));
    std::vector<double> power(static_cast<size_t>(n_bins));

    for (size_t fr = 0; fr < n_frames; ++fr) {
        size_t start = fr * cfg.hop;
        for (int i = 0; i < cfg.fft_size; ++i) {
            buf[i] = i < cfg.window
                         ? std::complex<double>(clip.samples[start + i] * window[i], 0.0)
                         : std::complex<double>(0.0, 0.0);
        }
        fft_radix2(buf);
        for (int b = 0; b < n_bins; ++b) power[b] = std::norm(buf[b]);

        std::vector<double> mel(cfg.n_mels);
        for (int m = 0; m < cfg.n_mels; ++m) {
            double e = 0.0;
            for (int b = 0; b < n_bins; ++b) e += fb[m][b] * power[b];
            mel[m] = std::log(std::max(e, cfg.log_floor));
        }
        frames.push_back(std::move(mel));
    }
    return frames;
}

SpectralProfile mel_profile(const std::vector<AudioBuffer>& clips, const std::string& group_id,
                            const MelConfig& cfg) {
    if (clips.empty()) throw std::invalid_argument("mel_profile: empty clip list");

    SpectralProfile out;
    out.group_id = group_id;
    out.sample_rate = cfg.sample_rate;
    out.profile.assign(static_cast<size_t>(cfg.n_mels), 0.0);

    int used = 0;
    for (const auto& raw : clips) {
        AudioBuffer clip =
            raw.sample_rate == cfg.sample_rate ? raw : resample_linear(raw, cfg.sample_rate);
        auto frames = log_mel_frames(clip, cfg);
        if (frames.empty()) continue;
        std::vector<double> clip_mean(static_cast<size_t>(cfg.n_mels), 0.0);
        for (const auto& fr : frames) {
            for (int m = 0; m < cfg.n_mels; ++m) clip_mean[m] += fr[m];
        }
        for (int m = 0; m < cfg.n_mels; ++m) {
            out.profile[m] += clip_mean[m] / static_cast<double>(frames.size());
        }
        ++used;
    }
    if (used == 0) throw std::runtime_error("mel_profile: no clip long enough for one frame");
    for (auto& v : out.profile) v /= used;
    out.clip_count = used;
    return out;
}

std::vector<double> softmax(const std::vector<double>& x) {
    double mx = *std::max_element(x.begin(), x.end());
    std::vector<double> out(x.size());
    double sum = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - mx);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

double jsd_distributions(const std::vector<double>& p, const std::vector<double>& q,
                         double log_base) {
    if (p.size() != q.size()) throw std::invalid_argument("jsd: bin count mismatch");
    double log_scale = std::log(log_base);
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) acc += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) acc += 0.5 * q[i] * std::log(q[i] / m);
    }
    return acc / log_scale;
}

double jsd(const SpectralProfile& a, const SpectralProfile& b, double log_base) {
    if (a.profile.size() != b.profile.size()) {
        throw std::invalid_argument("jsd: bin count mismatch");
    }
    return jsd_distributions(softmax(a.profile), softmax(b.profile), log_base);
}

double l2_distance(const SpectralProfile& a, const SpectralProfile& b, bool center) {
    if (a.profile.size() != b.profile.size()) {
        throw std::invalid_argument("l2_distance: bin count mismatch");
    }
    double mean_a = 0.0, mean_b = 0.0;
    if (center) {
        for (double v : a.profile) mean_a += v;
        for (double v : b.profile) mean_b += v;
        mean_a /= static_cast<double>(a.profile.size());
        mean_b /= static_cast<double>(b.profile.size());
    }
    double acc = 0.0;
    for (size_t i = 0; i < a.profile.size(); ++i) {
        double d = (a.profile[i] - mean_a) - (b.profile[i] - mean_b);
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace taskforge
