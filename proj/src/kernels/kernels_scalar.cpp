#include <algorithm>

#include "peakdp/kernels.hpp"

namespace peakdp::kernels::detail {

namespace {

void shifted_expectation(std::span<const double> src,
                         std::span<const double> weights,
                         std::span<const int> offsets,
                         int base,
                         std::span<double> dst) {
    const int last = static_cast<int>(src.size()) - 1;
    for (std::size_t m = 0; m < dst.size(); ++m) {
        double acc = 0.0;
        for (std::size_t s = 0; s < weights.size(); ++s) {
            const int idx = std::clamp(static_cast<int>(m) + base + offsets[s], 0, last);
            acc += weights[s] * src[static_cast<std::size_t>(idx)];
        }
        dst[m] = acc;
    }
}

void min_plus(double shift, std::span<const double> w, std::span<double> best) {
    for (std::size_t i = 0; i < best.size(); ++i) {
        const double cand = shift + w[i];
        if (cand < best[i]) best[i] = cand;
    }
}

void mark_minimizers(double shift,
                     std::span<const double> w,
                     std::span<const double> threshold,
                     std::int32_t k,
                     std::span<std::int32_t> lo,
                     std::span<std::int32_t> hi) {
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (shift + w[i] <= threshold[i]) {
            if (lo[i] < 0) lo[i] = k;
            hi[i] = k;
        }
    }
}

}  // namespace

const KernelSet scalar_kernels{shifted_expectation, min_plus, mark_minimizers};

}  // namespace peakdp::kernels::detail
