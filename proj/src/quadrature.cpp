#include "kwr/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kwr {
namespace {

struct State {
    const std::function<double(double)>& f;
    const QuadratureOptions& opts;
    std::size_t evals = 0;
    double err = 0.0;
    bool failed = false;
    double worst_unresolved = 0.0;

    double eval(double x) {
        ++evals;
        double y = f(x);
        if (!std::isfinite(y)) throw QuadratureError("integrand is not finite", std::numeric_limits<double>::infinity());
        return y;
    }
};

double simpson(double a, double b, double fa, double fm, double fb) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); }

double adapt(State& st, double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = st.eval(lm), frm = st.eval(rm);
    double left = simpson(a, m, fa, flm, fm);
    double right = simpson(m, b, fm, frm, fb);
    double diff = left + right - whole;
    if (std::fabs(diff) <= 15.0 * tol) {
        st.err += std::fabs(diff) / 15.0;
        return left + right + diff / 15.0;
    }
    if (depth >= st.opts.max_depth || st.evals > st.opts.max_evaluations || m <= a || m >= b) {
        st.failed = true;
        st.err += std::fabs(diff) / 15.0;
        st.worst_unresolved = std::max(st.worst_unresolved, std::fabs(diff) / 15.0);
        return left + right + diff / 15.0;
    }
    return adapt(st, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           adapt(st, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const std::vector<double>& breakpoints, const QuadratureOptions& opts) {
    if (!(std::isfinite(a) && std::isfinite(b))) throw std::invalid_argument("integration limits must be finite");
    QuadratureResult res;
    if (b <= a) return res;
    std::vector<double> pts = {a, b};
    for (double x : breakpoints)
        if (x > a && x < b) pts.push_back(x);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    State st{f, opts};
    const double width = b - a;
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
        double lo = std::nextafter(pts[s], pts[s + 1]);
        double hi = std::nextafter(pts[s + 1], pts[s]);
        if (!(hi > lo)) continue;
        const int panels = std::max(1, opts.initial_panels);
        const double seg_tol = opts.abs_tol * (pts[s + 1] - pts[s]) / width;
        for (int p = 0; p < panels; ++p) {
            double x0 = lo + (hi - lo) * p / panels;
            double x1 = p + 1 == panels ? hi : lo + (hi - lo) * (p + 1) / panels;
            double f0 = st.eval(x0), f1 = st.eval(x1), fm = st.eval(0.5 * (x0 + x1));
            double whole = simpson(x0, x1, f0, fm, f1);
            total += adapt(st, x0, x1, f0, fm, f1, whole, seg_tol / panels, 0);
        }
    }
    res.value = total;
    res.error_estimate = st.err;
    res.evaluations = st.evals;
    if (st.failed && st.err > opts.abs_tol)
        throw QuadratureError("adaptive quadrature did not reach the requested tolerance", st.err);
    return res;
}

}  // namespace kwr
