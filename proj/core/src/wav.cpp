#include "taskforge/wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace taskforge {

namespace {

uint32_t read_u32(const char* p) {
    uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

uint16_t read_u16(const char* p) {
    uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
}

}  // namespace

AudioBuffer read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open wav file: " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw std::runtime_error("not a RIFF/WAVE file: " + path);
    }

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    const char* data = nullptr;
    size_t data_len = 0;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = bytes.data() + pos;
        uint32_t len = read_u32(bytes.data() + pos + 4);
        const char* body = bytes.data() + pos + 8;
        if (pos + 8 + len > bytes.size()) break;
        if (std::memcmp(id, "fmt ", 4) == 0 && len >= 16) {
            format = read_u16(body);
            channels = read_u16(body + 2);
            rate = read_u32(body + 4);
            bits = read_u16(body + 14);
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = body;
            data_len = len;
        }
        pos += 8 + len + (len & 1);  // chunks are word-aligned
    }
    if (!data || channels == 0 || rate == 0) {
        throw std::runtime_error("malformed wav file: " + path);
    }

    AudioBuffer out;
    out.sample_rate = static_cast<int>(rate);
    if (format == 1 && bits == 16) {
        size_t frames = data_len / (2 * channels);
        out.samples.resize(frames);
        for (size_t i = 0; i < frames; ++i) {
            double acc = 0.0;
            for (uint16_t c = 0; c < channels; ++c) {
                int16_t s;
                std::memcpy(&s, data + 2 * (i * channels + c), 2);
                acc += s / 32768.0;
            }
            out.samples[i] = static_cast<float>(acc / channels);
        }
    } else if (format == 3 && bits == 32) {
        size_t frames = data_len / (4 * channels);
        out.samples.resize(frames);
        for (size_t i = 0; i < frames; ++i) {
            double acc = 0.0;
            for (uint16_t c = 0; c < channels; ++c) {
                float s;
                std::memcpy(&s, data + 4 * (i * channels + c), 4);
                acc += s;
            }
            out.samples[i] = static_cast<float>(acc / channels);
        }
    } else {
        throw std::runtime_error("unsupported wav encoding (want 16-bit PCM or float32): " +
                                 path);
    }
    return out;
}

void write_wav_f32(const std::string& path, const AudioBuffer& audio) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    uint32_t data_len = static_cast<uint32_t>(audio.samples.size() * 4);
    uint32_t riff_len = 36 + data_len;
    uint32_t rate = static_cast<uint32_t>(audio.sample_rate);
    uint32_t byte_rate = rate * 4;
    uint16_t fmt = 3, channels = 1, block = 4, bits = 32;
    uint32_t fmt_len = 16;
    f.write("RIFF", 4);
    f.write(reinterpret_cast<char*>(&riff_len), 4);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    f.write(reinterpret_cast<char*>(&fmt_len), 4);
    f.write(reinterpret_cast<char*>(&fmt), 2);
    f.write(reinterpret_cast<char*>(&channels), 2);
    f.write(reinterpret_cast<char*>(&rate), 4);
    f.write(reinterpret_cast<char*>(&byte_rate), 4);
    f.write(reinterpret_cast<char*>(&block), 2);
    f.write(reinterpret_cast<char*>(&bits), 2);
    f.write("data", 4);
    f.write(reinterpret_cast<char*>(&data_len), 4);
    f.write(reinterpret_cast<const char*>(audio.samples.data()), data_len);
}

AudioBuffer resample_linear(const AudioBuffer& in, int target_rate) {
    if (in.sample_rate == target_rate || in.samples.empty()) {
        AudioBuffer out = in;
        out.sample_rate = target_rate;
        return out;
    }
    double ratio = static_cast<double>(in.sample_rate) / target_rate;
    size_t out_len = static_cast<size_t>(in.samples.size() / ratio);
    AudioBuffer out;
    out.sample_rate = target_rate;
    out.samples.resize(out_len);
    for (size_t i = 0; i < out_len; ++i) {
        double src = i * ratio;
        size_t lo = static_cast<size_t>(src);
        size_t hi = std::min(lo + 1, in.samples.size() - 1);
        double frac = src - lo;
        out.samples[i] =
            static_cast<float>((1.0 - frac) * in.samples[lo] + frac * in.samples[hi]);
    }
    return out;
}

}  // namespace taskforge
