#pragma once

#include <string>
#include <vector>

namespace taskforge {

struct AudioBuffer {
    std::vector<float> samples;  // mono
    int sample_rate = 0;
};

/// Minimal RIFF/WAVE reader: 16-bit PCM and 32-bit float, any channel
/// count (mixed down by channel mean).
AudioBuffer read_wav(const std::string& path);

void write_wav_f32(const std::string& path, const AudioBuffer& audio);

/// Linear-interpolation resampler.
AudioBuffer resample_linear(const AudioBuffer& in, int target_rate);

}  // namespace taskforge
