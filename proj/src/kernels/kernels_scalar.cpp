#include "kwr/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace kwr::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double masked_sum_ge_scalar(const double* x, const double* w, double t, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] >= t) acc += w[i];
    }
    return acc;
}

void accumulate_ge_scalar(const double* x, double t, double* counts, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] >= t) counts[i] += 1.0;
    }
}

double max_abs_diff_scalar(const double* x, const double* y, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i] - y[i]));
    return m;
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{
        "scalar",       dot_scalar,           axpy_scalar,         scale_scalar,
        masked_sum_ge_scalar, accumulate_ge_scalar, max_abs_diff_scalar,
    };
    return table;
}

}  // namespace kwr::kernels
