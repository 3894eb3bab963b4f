// Compiled with -mavx2 (see src/CMakeLists.txt); only reached after a runtime
// CPU check. No FMA: the multiply and add stay separate to match the scalar path.

#include <algorithm>

#include <immintrin.h>

#include "peakdp/kernels.hpp"

namespace peakdp::kernels::detail {

namespace {

void shifted_expectation(std::span<const double> src,
                         std::span<const double> weights,
                         std::span<const int> offsets,
                         int base,
                         std::span<double> dst) {
    const int n_dst = static_cast<int>(dst.size());
    const int last = static_cast<int>(src.size()) - 1;
    const int n_w = static_cast<int>(weights.size());
    if (n_w == 0) {
        std::fill(dst.begin(), dst.end(), 0.0);
        return;
    }
    const auto [omin, omax] = std::minmax_element(offsets.begin(), offsets.end());

    // Interior: every tap m + base + offset lands inside src without clamping.
    const int interior_lo = std::clamp(-base - *omin, 0, n_dst);
    const int interior_hi = std::clamp(last - base - *omax + 1, interior_lo, n_dst);

    auto scalar_at = [&](int m) {
        double acc = 0.0;
        for (int s = 0; s < n_w; ++s) {
            const int idx = std::clamp(m + base + offsets[static_cast<std::size_t>(s)], 0, last);
            acc += weights[static_cast<std::size_t>(s)] * src[static_cast<std::size_t>(idx)];
        }
        return acc;
    };

    int m = 0;
    for (; m < interior_lo; ++m) dst[static_cast<std::size_t>(m)] = scalar_at(m);
    for (; m + 3 < interior_hi; m += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (int s = 0; s < n_w; ++s) {
            const __m256d w = _mm256_set1_pd(weights[static_cast<std::size_t>(s)]);
            const __m256d v = _mm256_loadu_pd(src.data() + m + base + offsets[static_cast<std::size_t>(s)]);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(w, v));
        }
        _mm256_storeu_pd(dst.data() + m, acc);
    }
    for (; m < n_dst; ++m) dst[static_cast<std::size_t>(m)] = scalar_at(m);
}

void min_plus(double shift, std::span<const double> w, std::span<double> best) {
    const std::size_t n = best.size();
    const __m256d sv = _mm256_set1_pd(shift);
    std::size_t i = 0;
    for (; i + 3 < n; i += 4) {
        const __m256d cand = _mm256_add_pd(sv, _mm256_loadu_pd(w.data() + i));
        // minpd(a, b) = a < b ? a : b, matching the scalar strict comparison.
        _mm256_storeu_pd(best.data() + i, _mm256_min_pd(cand, _mm256_loadu_pd(best.data() + i)));
    }
    for (; i < n; ++i) {
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
    const std::size_t n = lo.size();
    const __m256d sv = _mm256_set1_pd(shift);
    const __m128i kv = _mm_set1_epi32(k);
    const __m128i zero = _mm_setzero_si128();
    // Gathers the low dword of each 64-bit mask lane into the bottom 128 bits.
    const __m256i pack = _mm256_setr_epi32(0, 2, 4, 6, 0, 2, 4, 6);
    std::size_t i = 0;
    for (; i + 3 < n; i += 4) {
        const __m256d cand = _mm256_add_pd(sv, _mm256_loadu_pd(w.data() + i));
        const __m256d hit = _mm256_cmp_pd(cand, _mm256_loadu_pd(threshold.data() + i), _CMP_LE_OQ);
        const __m128i mask =
            _mm256_castsi256_si128(_mm256_permutevar8x32_epi32(_mm256_castpd_si256(hit), pack));
        auto* lo_p = reinterpret_cast<__m128i*>(lo.data() + i);
        auto* hi_p = reinterpret_cast<__m128i*>(hi.data() + i);
        const __m128i lo_v = _mm_loadu_si128(lo_p);
        const __m128i unset = _mm_cmplt_epi32(lo_v, zero);
        _mm_storeu_si128(lo_p, _mm_blendv_epi8(lo_v, kv, _mm_and_si128(mask, unset)));
        _mm_storeu_si128(hi_p, _mm_blendv_epi8(_mm_loadu_si128(hi_p), kv, mask));
    }
    for (; i < n; ++i) {
        if (shift + w[i] <= threshold[i]) {
            if (lo[i] < 0) lo[i] = k;
            hi[i] = k;
        }
    }
}

}  // namespace

const KernelSet avx2_kernels{shifted_expectation, min_plus, mark_minimizers};

}  // namespace peakdp::kernels::detail
