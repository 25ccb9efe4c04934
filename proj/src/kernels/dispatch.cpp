#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kwr/kernels.hpp"

namespace kwr::kernels {
namespace {

const KernelTable* initial_selection() {
    if (const char* env = std::getenv("KWR_SIMD")) {
        if (std::string(env) == "scalar") return &scalar_kernels();
    }
    if (cpu_has_avx2() && avx2_kernels() != nullptr) return avx2_kernels();
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_selection()};
    return table;
}

void check_sizes(std::size_t a, std::size_t b) {
    if (a != b) throw std::invalid_argument("kernel operands differ in length");
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

Isa active_isa() { return &active() == &scalar_kernels() ? Isa::Scalar : Isa::Avx2; }

void select(Isa isa) {
    if (isa == Isa::Scalar) {
        current().store(&scalar_kernels(), std::memory_order_release);
        return;
    }
    if (!cpu_has_avx2() || avx2_kernels() == nullptr) {
        throw std::runtime_error("AVX2 kernels are not available on this machine");
    }
    current().store(avx2_kernels(), std::memory_order_release);
}

double dot(std::span<const double> x, std::span<const double> y) {
    check_sizes(x.size(), y.size());
    return active().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    check_sizes(x.size(), y.size());
    active().axpy(a, x.data(), y.data(), x.size());
}

void scale(double a, std::span<double> x) { active().scale(a, x.data(), x.size()); }

double masked_sum_ge(std::span<const double> x, std::span<const double> w, double t) {
    check_sizes(x.size(), w.size());
    return active().masked_sum_ge(x.data(), w.data(), t, x.size());
}

void accumulate_ge(std::span<const double> x, double t, std::span<double> counts) {
    check_sizes(x.size(), counts.size());
    active().accumulate_ge(x.data(), t, counts.data(), x.size());
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
    check_sizes(x.size(), y.size());
    return active().max_abs_diff(x.data(), y.data(), x.size());
}

}  // namespace kwr::kernels
