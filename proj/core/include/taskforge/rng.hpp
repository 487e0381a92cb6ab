#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace taskforge {

/// Philox 4x32-10 counter-based generator (Salmon et al., SC 2011).
/// Output is a pure function of (key, counter), so any element of any
/// stream can be generated independently of scheduling order.
struct Philox4x32 {
    static std::array<uint32_t, 4> block(uint64_t key, const std::array<uint32_t, 4>& counter);
};

/// One random stream addressed by 64-bit indices. `key` identifies the
/// stream; `index` identifies the draw. Used with index = flat element
/// position so per-element randomness is reproducible and parallel-safe.
class CounterRng {
  public:
    explicit CounterRng(uint64_t key) : key_(key) {}

    /// Uniform in [0, 1). Deterministic in (key, index).
    double uniform(uint64_t index) const;

    /// Standard normal via Box-Muller on two lanes of one block.
    double gaussian(uint64_t index) const;

  private:
    uint64_t key_;
};

/// Stream key for a per-vector, per-tensor mask stream:
/// SHA-256(decimal(base_seed) || 0x1f || stream_id || 0x1f || tensor_name),
/// truncated to 64 bits.
uint64_t derive_stream_key(uint64_t base_seed, const std::string& stream_id,
                           const std::string& tensor_name);

}  // namespace taskforge
