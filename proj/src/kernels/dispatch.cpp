#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "peakdp/kernels.hpp"

namespace peakdp::kernels {

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
    }
    return false;
}

Isa detect_best() { return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

namespace {

Isa initial_isa() {
    if (const char* env = std::getenv("PEAKDP_ISA")) {
        const std::string name(env);
        if (name == "scalar") return Isa::scalar;
        if (name == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
    }
    return detect_best();
}

std::atomic<Isa>& active_slot() {
    static std::atomic<Isa> slot{initial_isa()};
    return slot;
}

}  // namespace

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (!isa_supported(isa)) throw std::invalid_argument(std::string("ISA not supported here: ") + isa_name(isa));
    active_slot().store(isa, std::memory_order_relaxed);
}

const KernelSet& kernel_set(Isa isa) {
    if (!isa_supported(isa)) throw std::invalid_argument(std::string("ISA not supported here: ") + isa_name(isa));
#if defined(__x86_64__) || defined(_M_X64)
    if (isa == Isa::avx2) return detail::avx2_kernels;
#endif
    return detail::scalar_kernels;
}

}  // namespace peakdp::kernels
