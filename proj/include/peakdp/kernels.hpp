#pragma once

// Inner loops of the backward induction, with a scalar reference and SIMD
// variants chosen at runtime.
//
// Every variant performs the same floating-point operations in the same
// order per output element (no fused multiply-add), so results are
// bit-identical across variants. The equivalence tests rely on this.

#include <cstdint>
#include <span>

namespace peakdp::kernels {

enum class Isa { scalar, avx2 };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);

/// Widest variant the running CPU supports.
Isa detect_best();

/// Variant used by the solver. Defaults to detect_best() unless the
/// PEAKDP_ISA environment variable names another supported variant.
Isa active_isa();

/// Throws std::invalid_argument if `isa` is not supported on this CPU.
void set_active_isa(Isa isa);

struct KernelSet {
    /// dst[m] = sum_s weights[s] * src[clamp(m + base + offsets[s], 0, src.size() - 1)],
    /// accumulated in ascending s starting from 0.0.
    void (*shifted_expectation)(std::span<const double> src,
                                std::span<const double> weights,
                                std::span<const int> offsets,
                                int base,
                                std::span<double> dst);

    /// best[i] = min(best[i], shift + w[i]).
    void (*min_plus)(double shift, std::span<const double> w, std::span<double> best);

    /// Where shift + w[i] <= threshold[i]: hi[i] = k, and lo[i] = k if lo[i] < 0.
    /// Called with ascending k this records the first and last minimizer.
    void (*mark_minimizers)(double shift,
                            std::span<const double> w,
                            std::span<const double> threshold,
                            std::int32_t k,
                            std::span<std::int32_t> lo,
                            std::span<std::int32_t> hi);
};

const KernelSet& kernel_set(Isa isa);
inline const KernelSet& active() { return kernel_set(active_isa()); }

namespace detail {
extern const KernelSet scalar_kernels;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelSet avx2_kernels;
#endif
}  // namespace detail

}  // namespace peakdp::kernels
