#include "combwalk/stats.hpp"

#include <algorithm>
#include <stdexcept>

namespace combwalk {

BatchMeans::BatchMeans(std::size_t total, std::size_t n_batches)
    : batch_len_(std::max<std::size_t>(1, total / std::max<std::size_t>(1, n_batches))),
      n_batches_(n_batches) {
    batch_means_.reserve(n_batches);
}

void BatchMeans::add(double x) {
    total_.add(x);
    ++count_;
    // Samples beyond n_batches * batch_len enter the mean but not the batches.
    if (batch_means_.size() >= n_batches_) return;
    current_.add(x);
    if (++in_batch_ == batch_len_) {
        batch_means_.push_back(current_.value() / static_cast<double>(batch_len_));
        current_ = CompensatedSum{};
        in_batch_ = 0;
    }
}

MeanError BatchMeans::result() const {
    MeanError r;
    if (count_ == 0) return r;
    r.mean = total_.value() / static_cast<double>(count_);
    const std::size_t b = batch_means_.size();
    if (b < 2) return r;
    double m = 0.0;
    for (double v : batch_means_) m += v;
    m /= static_cast<double>(b);
    double s2 = 0.0;
    for (double v : batch_means_) s2 += (v - m) * (v - m);
    s2 /= static_cast<double>(b - 1);
    r.error = std::sqrt(s2 / static_cast<double>(b));
    return r;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y,
                   std::span<const double> sigma) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n || (!sigma.empty() && sigma.size() != n))
        throw std::invalid_argument("fit_line: need at least two matching points");
    double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
        s += w;
        sx += w * x[i];
        sy += w * y[i];
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * y[i];
    }
    double det = s * sxx - sx * sx;
    if (det == 0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LinearFit f;
    f.slope = (s * sxy - sx * sy) / det;
    f.intercept = (sxx * sy - sx * sxy) / det;
    f.var_intercept = sxx / det;
    f.var_slope = s / det;
    f.cov = -sx / det;
    if (sigma.empty()) {
        double rss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        double scale = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;
        f.var_intercept *= scale;
        f.var_slope *= scale;
        f.cov *= scale;
    }
    return f;
}

}  // namespace combwalk
