#include "kwr/simplex.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "kwr/kernels.hpp"

namespace kwr {

void SparseColumns::push_column(const std::vector<std::size_t>& r, const std::vector<double>& v) {
    if (r.size() != v.size()) throw std::invalid_argument("row and value lists differ in length");
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] >= rows) throw std::out_of_range("row index out of range");
        row_idx.push_back(r[i]);
        values.push_back(v[i]);
    }
    col_ptr.push_back(row_idx.size());
}

std::vector<double> SparseColumns::multiply(const std::vector<double>& x) const {
    if (x.size() != cols()) throw std::invalid_argument("dimension mismatch");
    std::vector<double> y(rows, 0.0);
    for (std::size_t j = 0; j < cols(); ++j)
        for (std::size_t e = col_ptr[j]; e < col_ptr[j + 1]; ++e) y[row_idx[e]] += values[e] * x[j];
    return y;
}

namespace {

class Solver {
public:
    Solver(const LpProblem& p, const SimplexOptions& o)
        : a_(p.a), b_(p.b), c_(p.c), opts_(o), m_(p.a.rows), n_(p.a.cols()) {
        if (b_.size() != m_ || c_.size() != n_) throw std::invalid_argument("LP dimensions are inconsistent");
        // rows with negative rhs are negated so the artificial basis starts feasible
        for (std::size_t r = 0; r < m_; ++r) {
            if (b_[r] < 0.0) {
                b_[r] = -b_[r];
                flipped_.push_back(r);
            }
        }
        if (!flipped_.empty()) {
            std::vector<char> flip(m_, 0);
            for (auto r : flipped_) flip[r] = 1;
            for (std::size_t e = 0; e < a_.row_idx.size(); ++e)
                if (flip[a_.row_idx[e]]) a_.values[e] = -a_.values[e];
        }
        basis_.resize(m_);
        is_basic_.assign(n_ + m_, 0);
        for (std::size_t r = 0; r < m_; ++r) {
            basis_[r] = n_ + r;
            is_basic_[n_ + r] = 1;
        }
        binv_ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
        xb_ = b_;
        w_.resize(m_);
        cb_.resize(m_);
        y_.resize(m_);
    }

    LpSolution run(const std::vector<double>& implied_upper) {
        phase(1);
        double infeas = 0.0;
        for (std::size_t r = 0; r < m_; ++r)
            if (basis_[r] >= n_) infeas += xb_[r];
        double bscale = 1.0;
        for (double v : b_) bscale = std::max(bscale, std::fabs(v));
        if (infeas > opts_.feasibility_tol * bscale) throw LpError("LP is infeasible", infeas);
        drive_out_artificials();
        phase(2);
        refactor();
        return extract(implied_upper);
    }

private:
    double cost(std::size_t j, int ph) const {
        if (ph == 1) return j >= n_ ? 1.0 : 0.0;
        return j >= n_ ? 0.0 : c_[j];
    }

    std::span<double> col(Eigen::Index c) { return {binv_.col(c).data(), m_}; }

    // w = B^{-1} A_j
    void ftran(std::size_t j) {
        if (j >= n_) {
            auto src = col(static_cast<Eigen::Index>(j - n_));
            std::copy(src.begin(), src.end(), w_.begin());
            return;
        }
        std::fill(w_.begin(), w_.end(), 0.0);
        for (std::size_t e = a_.col_ptr[j]; e < a_.col_ptr[j + 1]; ++e)
            kernels::axpy(a_.values[e], col(static_cast<Eigen::Index>(a_.row_idx[e])), w_);
    }

    void duals(int ph) {
        for (std::size_t i = 0; i < m_; ++i) cb_[i] = cost(basis_[i], ph);
        for (std::size_t r = 0; r < m_; ++r) y_[r] = kernels::dot(cb_, col(static_cast<Eigen::Index>(r)));
    }

    double reduced_cost(std::size_t j, int ph) const {
        if (j >= n_) return cost(j, ph) - y_[j - n_];
        double d = c_.empty() || ph == 1 ? 0.0 : c_[j];
        for (std::size_t e = a_.col_ptr[j]; e < a_.col_ptr[j + 1]; ++e) d -= a_.values[e] * y_[a_.row_idx[e]];
        return d;
    }

    void pivot(std::size_t p, std::size_t entering) {
        const double wp = w_[p];
        for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(m_); ++c) {
            double alpha = binv_(static_cast<Eigen::Index>(p), c) / wp;
            if (alpha == 0.0) continue;
            kernels::axpy(-alpha, w_, col(c));
            binv_(static_cast<Eigen::Index>(p), c) = alpha;
        }
        is_basic_[basis_[p]] = 0;
        basis_[p] = entering;
        is_basic_[entering] = 1;
        ++since_refactor_;
        ++iterations_;
    }

    void refactor() {
        const auto m = static_cast<Eigen::Index>(m_);
        Eigen::MatrixXd bmat = Eigen::MatrixXd::Zero(m, m);
        for (std::size_t i = 0; i < m_; ++i) {
            std::size_t j = basis_[i];
            if (j >= n_) {
                bmat(static_cast<Eigen::Index>(j - n_), static_cast<Eigen::Index>(i)) = 1.0;
            } else {
                for (std::size_t e = a_.col_ptr[j]; e < a_.col_ptr[j + 1]; ++e)
                    bmat(static_cast<Eigen::Index>(a_.row_idx[e]), static_cast<Eigen::Index>(i)) = a_.values[e];
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
        if (m > 0 && !(lu.rcond() > 1e-14)) throw LpError("basis matrix became singular", lu.rcond());
        binv_ = lu.inverse();
        Eigen::Map<const Eigen::VectorXd> bv(b_.data(), m);
        Eigen::VectorXd x = binv_ * bv;
        for (std::size_t i = 0; i < m_; ++i) {
            double v = x(static_cast<Eigen::Index>(i));
            xb_[i] = (v < 0.0 && v > -opts_.feasibility_tol) ? 0.0 : v;
        }
        since_refactor_ = 0;
    }

    void phase(int ph) {
        std::size_t degenerate = 0;
        for (;;) {
            if (iterations_ >= opts_.max_iterations) throw LpError("simplex iteration limit reached", 0.0);
            if (since_refactor_ >= opts_.refactor_every) refactor();
            duals(ph);
            const bool bland = degenerate > opts_.degenerate_limit;
            std::size_t entering = n_ + m_;
            double best = -opts_.optimality_tol;
            const std::size_t limit = ph == 1 ? n_ + m_ : n_;
            for (std::size_t j = 0; j < limit; ++j) {
                if (is_basic_[j]) continue;
                double d = reduced_cost(j, ph);
                if (d < best) {
                    best = d;
                    entering = j;
                    if (bland) break;
                }
            }
            if (entering == n_ + m_) return;

            ftran(entering);
            std::size_t leave = m_;
            double ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                if (w_[i] <= 1e-9) continue;
                double r = std::max(0.0, xb_[i]) / w_[i];
                bool take = r < ratio - 1e-12;
                if (!take && r <= ratio + 1e-12 && leave < m_)
                    take = bland ? basis_[i] < basis_[leave] : w_[i] > w_[leave];
                if (take) {
                    ratio = std::min(ratio, r);
                    leave = i;
                }
            }
            if (leave == m_) throw LpError("LP is unbounded", 0.0);
            for (std::size_t i = 0; i < m_; ++i) xb_[i] -= ratio * w_[i];
            xb_[leave] = ratio;
            pivot(leave, entering);
            degenerate = ratio <= 1e-12 ? degenerate + 1 : 0;
        }
    }

    void drive_out_artificials() {
        for (std::size_t p = 0; p < m_; ++p) {
            if (basis_[p] < n_) continue;
            std::size_t pick = n_;
            double mag = 1e-9;
            for (std::size_t j = 0; j < n_; ++j) {
                if (is_basic_[j]) continue;
                double v = 0.0;
                for (std::size_t e = a_.col_ptr[j]; e < a_.col_ptr[j + 1]; ++e)
                    v += a_.values[e] * binv_(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(a_.row_idx[e]));
                if (std::fabs(v) > mag) {
                    mag = std::fabs(v);
                    pick = j;
                }
            }
            // a redundant row keeps its artificial at zero
            if (pick == n_) continue;
            ftran(pick);
            double theta = xb_[p] / w_[p];
            for (std::size_t i = 0; i < m_; ++i) xb_[i] -= theta * w_[i];
            xb_[p] = theta;
            pivot(p, pick);
        }
    }

    LpSolution extract(const std::vector<double>& upper) {
        LpSolution s;
        s.iterations = iterations_;
        s.x.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_) s.x[basis_[i]] = std::max(0.0, xb_[i]);
        for (std::size_t j = 0; j < n_; ++j) s.objective += c_[j] * s.x[j];

        auto ax = a_.multiply(s.x);
        for (std::size_t r = 0; r < m_; ++r) s.primal_residual = std::max(s.primal_residual, std::fabs(ax[r] - b_[r]));

        duals(2);
        double bound = 0.0;
        for (std::size_t r = 0; r < m_; ++r) bound += b_[r] * y_[r];
        for (std::size_t j = 0; j < n_; ++j) {
            double d = reduced_cost(j, 2);
            if (d >= 0.0) continue;
            if (!upper.empty()) {
                bound += d * upper[j];
            } else if (d < -opts_.optimality_tol) {
                throw LpError("dual infeasible at termination", -d);
            }
        }
        s.dual_bound = bound;
        s.duality_gap = std::fabs(s.objective - bound);
        s.y = y_;
        for (auto r : flipped_) s.y[r] = -s.y[r];
        if (s.primal_residual > 1e3 * opts_.feasibility_tol)
            throw LpError("primal residual too large", s.primal_residual);
        return s;
    }

    SparseColumns a_;
    std::vector<double> b_, c_;
    SimplexOptions opts_;
    std::size_t m_, n_;
    std::vector<std::size_t> flipped_;
    std::vector<std::size_t> basis_;
    std::vector<char> is_basic_;
    Eigen::MatrixXd binv_;
    std::vector<double> xb_, w_, cb_, y_;
    std::size_t since_refactor_ = 0;
    std::size_t iterations_ = 0;
};

}  // namespace

LpSolution solve_lp(const LpProblem& problem, const SimplexOptions& opts) {
    if (!problem.implied_upper.empty() && problem.implied_upper.size() != problem.a.cols())
        throw std::invalid_argument("implied_upper must match the column count");
    Solver s(problem, opts);
    return s.run(problem.implied_upper);
}

}  // namespace kwr
