#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace aiw::detail {

/// Bunch-Kaufman factorization P M P^T = L D L^T of a small dense symmetric
/// (possibly indefinite) matrix, with 1x1 and 2x2 pivot blocks.
class SymmetricIndefiniteLDLT {
public:
    explicit SymmetricIndefiniteLDLT(const Eigen::MatrixXd& m) { factor(m); }

    bool singular() const { return singular_; }

    /// max |mu| / min |mu| over the eigenvalues of the D blocks; +inf when a
    /// pivot is exactly zero.
    double condition_estimate() const {
        if (singular_) return std::numeric_limits<double>::infinity();
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (std::size_t k = 0; k < block_.size(); ++k) {
            const int i = static_cast<int>(k);
            if (block_[k] == 1) {
                const double mu = std::abs(d_(i, i));
                lo = std::min(lo, mu);
                hi = std::max(hi, mu);
            } else if (block_[k] == 2) {
                const double a = d_(i, i), b = d_(i + 1, i), c = d_(i + 1, i + 1);
                const double mean = 0.5 * (a + c);
                const double rad = std::hypot(0.5 * (a - c), b);
                const double m1 = std::abs(mean + rad), m2 = std::abs(mean - rad);
                lo = std::min({lo, m1, m2});
                hi = std::max({hi, m1, m2});
            }
        }
        if (lo == 0.0) return std::numeric_limits<double>::infinity();
        return hi / lo;
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        const int n = static_cast<int>(perm_.size());
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y[i] = b[perm_[i]];
        y = l_.triangularView<Eigen::UnitLower>().solve(y);
        for (int k = 0; k < n;) {
            if (block_[k] == 1) {
                y[k] /= d_(k, k);
                ++k;
            } else {
                const Eigen::Matrix2d blk = d_.block<2, 2>(k, k);
                const Eigen::Vector2d rhs(y[k], y[k + 1]);
                const Eigen::Vector2d sol = blk.inverse() * rhs;
                y[k] = sol[0];
                y[k + 1] = sol[1];
                k += 2;
            }
        }
        y = l_.transpose().triangularView<Eigen::UnitUpper>().solve(y);
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x[perm_[i]] = y[i];
        return x;
    }

private:
    void factor(const Eigen::MatrixXd& m) {
        const int n = static_cast<int>(m.rows());
        const double alpha = (1.0 + std::sqrt(17.0)) / 8.0;
        Eigen::MatrixXd a = m;
        l_ = Eigen::MatrixXd::Identity(n, n);
        d_ = Eigen::MatrixXd::Zero(n, n);
        perm_.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) perm_[i] = i;
        block_.assign(static_cast<std::size_t>(n), 0);

        auto swap_index = [&](int p, int q, int k) {
            if (p == q) return;
            a.row(p).swap(a.row(q));
            a.col(p).swap(a.col(q));
            if (k > 0) l_.block(p, 0, 1, k).swap(l_.block(q, 0, 1, k));
            std::swap(perm_[p], perm_[q]);
        };

        int k = 0;
        while (k < n) {
            const double akk = std::abs(a(k, k));
            int imax = k;
            double colmax = 0.0;
            for (int i = k + 1; i < n; ++i)
                if (std::abs(a(i, k)) > colmax) {
                    colmax = std::abs(a(i, k));
                    imax = i;
                }
            if (std::max(akk, colmax) == 0.0) {
                singular_ = true;
                block_[k] = 1;
                ++k;
                continue;
            }

            int step = 1;
            int pivot = k;
            if (akk < alpha * colmax) {
                double rowmax = 0.0;
                for (int j = k; j < n; ++j)
                    if (j != imax) rowmax = std::max(rowmax, std::abs(a(imax, j)));
                if (akk * rowmax >= alpha * colmax * colmax) {
                    pivot = k;
                } else if (std::abs(a(imax, imax)) >= alpha * rowmax) {
                    pivot = imax;
                } else {
                    pivot = imax;
                    step = 2;
                }
            }

            const int kk = k + step - 1;
            swap_index(kk, pivot, k);

            if (step == 1) {
                const double dkk = a(k, k);
                d_(k, k) = dkk;
                block_[k] = 1;
                const int rest = n - k - 1;
                if (rest > 0) {
                    const Eigen::VectorXd col = a.col(k).tail(rest) / dkk;
                    l_.col(k).tail(rest) = col;
                    a.bottomRightCorner(rest, rest).noalias() -= dkk * col * col.transpose();
                }
                ++k;
            } else {
                const Eigen::Matrix2d blk = a.block<2, 2>(k, k);
                d_.block<2, 2>(k, k) = blk;
                block_[k] = 2;
                block_[k + 1] = 0;
                const int rest = n - k - 2;
                if (rest > 0) {
                    const Eigen::MatrixXd c = a.block(k + 2, k, rest, 2);
                    const Eigen::MatrixXd lk = c * blk.inverse();
                    l_.block(k + 2, k, rest, 2) = lk;
                    a.bottomRightCorner(rest, rest).noalias() -= lk * c.transpose();
                }
                k += 2;
            }
        }
    }

    Eigen::MatrixXd l_;
    Eigen::MatrixXd d_;
    std::vector<int> perm_;
    std::vector<int> block_;  // 1: 1x1 pivot, 2: first row of 2x2, 0: second row
    bool singular_ = false;
};

}  // namespace aiw::detail
