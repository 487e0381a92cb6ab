#pragma once

#include <complex>
#include <string>
#include <vector>

#include "taskforge/wav.hpp"

namespace taskforge {

struct SpectralProfile {
    std::string group_id;
    std::vector<double> profile;  // mean log-mel energy per bin
    int clip_count = 0;
    int sample_rate = 16000;
    uint64_t sample_seed = 0;  // seed used when clips were subsampled
};

struct MelConfig {
    int n_mels = 128;
    int sample_rate = 16000;
    int window = 400;   // 25 ms at 16 kHz, Hann
    int hop = 160;      // 10 ms
    int fft_size = 512;
    double fmin = 0.0;
    double fmax = 8000.0;     // Nyquist at 16 kHz
    double log_floor = 1e-10;
};

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& buf);

/// Triangular mel filterbank (m = 2595 log10(1 + f/700)), filters
/// normalized to unit weight sum. Rows: n_mels, cols: fft_size/2 + 1.
std::vector<std::vector<double>> mel_filterbank(const MelConfig& cfg);

/// Center frequency (Hz) of mel bin `m` under cfg; test oracle for peak
/// placement.
double mel_bin_center_hz(const MelConfig& cfg, int m);

/// Log-mel frames of one clip: per frame, Hann window -> power spectrum
/// -> filterbank -> ln(max(energy, floor)).
std::vector<std::vector<double>> log_mel_frames(const AudioBuffer& clip, const MelConfig& cfg);

/// Mean log-mel profile over frames, then over clips (clip-count weighted
/// by frame count is NOT used: each clip contributes its own time-mean,
/// clips averaged uniformly).
SpectralProfile mel_profile(const std::vector<AudioBuffer>& clips, const std::string& group_id,
                            const MelConfig& cfg = {});

/// Jensen-Shannon divergence between softmax(a) and softmax(b).
/// log_base 2 bounds the value by 1.
double jsd(const SpectralProfile& a, const SpectralProfile& b, double log_base = 2.0);

/// Same, on already-normalized probability vectors.
double jsd_distributions(const std::vector<double>& p, const std::vector<double>& q,
                         double log_base = 2.0);

/// Euclidean distance of profiles; with `center`, each profile's own mean
/// is subtracted first (removes overall recording level).
double l2_distance(const SpectralProfile& a, const SpectralProfile& b, bool center);

std::vector<double> softmax(const std::vector<double>& x);

}  // namespace taskforge
