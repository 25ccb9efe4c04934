#pragma once

// Data-parallel inner loops shared by the table evaluators and the simplex solver.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant compiled in its own translation unit. The variant is selected once at
// runtime from CPUID; setting KWR_SIMD=scalar forces the reference path.
// Vector variants may reorder floating-point sums, so results agree with the
// scalar path to rounding, not bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace kwr::kernels {

struct KernelTable {
    std::string_view name;
    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // x[i] *= a
    void (*scale)(double a, double* x, std::size_t n);
    // sum_i w[i] * [x[i] >= t]
    double (*masked_sum_ge)(const double* x, const double* w, double t, std::size_t n);
    // counts[i] += [x[i] >= t]
    void (*accumulate_ge)(const double* x, double t, double* counts, std::size_t n);
    // max_i |x[i] - y[i]|
    double (*max_abs_diff)(const double* x, const double* y, std::size_t n);
};

enum class Isa { Scalar, Avx2 };

const KernelTable& scalar_kernels();
// nullptr when the AVX2 translation unit was not built.
const KernelTable* avx2_kernels();

bool cpu_has_avx2();

// The table used by the span wrappers below.
const KernelTable& active();
Isa active_isa();
// Override runtime selection. Selecting Avx2 on a machine without it throws.
void select(Isa isa);

double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(double a, std::span<double> x);
double masked_sum_ge(std::span<const double> x, std::span<const double> w, double t);
void accumulate_ge(std::span<const double> x, double t, std::span<double> counts);
double max_abs_diff(std::span<const double> x, std::span<const double> y);

}  // namespace kwr::kernels
