#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace combwalk {

// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct MeanError {
    double mean = 0.0;
    double error = 0.0;
};

// Batch-means estimator for an autocorrelated sequence of known length.
class BatchMeans {
public:
    BatchMeans(std::size_t total, std::size_t n_batches = 100);
    void add(double x);
    MeanError result() const;

private:
    std::size_t batch_len_;
    std::size_t n_batches_;
    std::size_t in_batch_ = 0;
    CompensatedSum total_;
    CompensatedSum current_;
    std::vector<double> batch_means_;
    std::size_t count_ = 0;
};

// Welford accumulator for independent samples.
class RunningStats {
public:
    void add(double x) {
        ++n_;
        double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double std_error() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double var_intercept = 0.0;
    double var_slope = 0.0;
    double cov = 0.0;
};

// Weighted least squares y = a + b x. Weights are inverse variances; when
// `sigma` is empty, unit weights are used and the parameter covariance is
// scaled by the residual variance.
LinearFit fit_line(std::span<const double> x, std::span<const double> y,
                   std::span<const double> sigma = {});

}  // namespace combwalk
