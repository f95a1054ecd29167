#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace combwalk {

// LU factorization with partial pivoting for a band matrix with kl sub- and
// ku super-diagonals. Row interchanges widen U to ku+kl super-diagonals, as
// in LAPACK's gbtrf, so each row stores 2*kl+ku+1 entries.
template <typename T>
class BandLU {
public:
    BandLU(std::size_t n, std::size_t kl, std::size_t ku)
        : n_(n), kl_(kl), ku_(ku), w_(2 * kl + ku + 1), ab_(n * w_, T{}), piv_(n, 0) {}

    std::size_t size() const { return n_; }

    bool in_band(std::size_t i, std::size_t j) const {
        return j + kl_ >= i && j <= i + ku_ + kl_ && j < n_;
    }
    T& at(std::size_t i, std::size_t j) { return ab_[i * w_ + (j + kl_ - i)]; }
    const T& at(std::size_t i, std::size_t j) const { return ab_[i * w_ + (j + kl_ - i)]; }

    // Exactly zero pivots are replaced by a tiny value when `perturb_zero`
    // is set (inverse iteration at an exact eigenvalue); otherwise they raise.
    void factor(bool perturb_zero = false) {
        double scale = 0.0;
        for (const T& v : ab_) scale = std::max(scale, std::abs(v));
        const double tiny = std::max(scale, 1.0) * std::numeric_limits<double>::epsilon();
        min_pivot_ = std::numeric_limits<double>::infinity();
        max_pivot_ = 0.0;
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t rlast = std::min(n_ - 1, k + kl_);
            const std::size_t clast = std::min(n_ - 1, k + ku_ + kl_);
            std::size_t p = k;
            double best = std::abs(at(k, k));
            for (std::size_t r = k + 1; r <= rlast; ++r) {
                if (std::abs(at(r, k)) > best) {
                    best = std::abs(at(r, k));
                    p = r;
                }
            }
            piv_[k] = p;
            if (p != k)
                for (std::size_t j = k; j <= clast; ++j) std::swap(at(k, j), at(p, j));
            if (at(k, k) == T{}) {
                if (!perturb_zero) throw std::runtime_error("BandLU: singular matrix");
                at(k, k) = T(tiny);
            }
            const double mag = std::abs(at(k, k));
            min_pivot_ = std::min(min_pivot_, mag);
            max_pivot_ = std::max(max_pivot_, mag);
            for (std::size_t r = k + 1; r <= rlast; ++r) {
                T l = at(r, k) / at(k, k);
                at(r, k) = l;
                if (l == T{}) continue;
                for (std::size_t j = k + 1; j <= clast; ++j) at(r, j) -= l * at(k, j);
            }
        }
    }

    // In-place solve A x = b.
    template <typename V>
    void solve(V& b) const {
        for (std::size_t k = 0; k < n_; ++k) {
            if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
            const std::size_t rlast = std::min(n_ - 1, k + kl_);
            for (std::size_t r = k + 1; r <= rlast; ++r) b[r] -= at(r, k) * b[k];
        }
        for (std::size_t i = n_; i-- > 0;) {
            const std::size_t clast = std::min(n_ - 1, i + ku_ + kl_);
            auto s = b[i];
            for (std::size_t j = i + 1; j <= clast; ++j) s -= at(i, j) * b[j];
            b[i] = s / at(i, i);
        }
    }

    // Ratio of largest to smallest pivot magnitude; a cheap conditioning hint.
    double pivot_ratio() const { return max_pivot_ / min_pivot_; }

private:
    std::size_t n_, kl_, ku_, w_;
    std::vector<T> ab_;
    std::vector<std::size_t> piv_;
    double min_pivot_ = 0.0;
    double max_pivot_ = 0.0;
};

// Solver for a spine operator: tridiagonal with constant off-diagonal `off`,
// plus the wrap-around coupling when periodic. Periodic matrices are
// renumbered 0, n-1, 1, n-2, ... which turns the cycle into a pentadiagonal
// band, so one banded LU handles both boundary kinds.
template <typename T>
class SpineSolver {
public:
    SpineSolver(const std::vector<T>& diag, T off, bool periodic, bool perturb_zero = false)
        : n_(diag.size()), periodic_(periodic && diag.size() >= 3),
          lu_(diag.size(), periodic_ ? 2 : 1, periodic_ ? 2 : 1), pos_(n_) {
        if (n_ == 0) throw std::invalid_argument("SpineSolver: empty matrix");
        if (periodic_) {
            for (std::size_t k = 0; k < n_; ++k)
                pos_[k % 2 == 0 ? k / 2 : n_ - 1 - k / 2] = k;
        } else {
            for (std::size_t i = 0; i < n_; ++i) pos_[i] = i;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            lu_.at(pos_[i], pos_[i]) += diag[i];
            if (i + 1 < n_) {
                lu_.at(pos_[i], pos_[i + 1]) += off;
                lu_.at(pos_[i + 1], pos_[i]) += off;
            }
        }
        if (periodic_) {
            lu_.at(pos_[0], pos_[n_ - 1]) += off;
            lu_.at(pos_[n_ - 1], pos_[0]) += off;
        }
        lu_.factor(perturb_zero);
        work_.resize(n_);
    }

    template <typename V>
    void solve(V& b) {
        for (std::size_t i = 0; i < n_; ++i) work_[pos_[i]] = b[i];
        lu_.solve(work_);
        for (std::size_t i = 0; i < n_; ++i) b[i] = work_[pos_[i]];
    }

    double pivot_ratio() const { return lu_.pivot_ratio(); }

private:
    std::size_t n_;
    bool periodic_;
    BandLU<T> lu_;
    std::vector<std::size_t> pos_;
    std::vector<T> work_;
};

}  // namespace combwalk
