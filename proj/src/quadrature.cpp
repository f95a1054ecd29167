#include "combwalk/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace combwalk {

namespace {

struct Rule {
    std::vector<double> x, wk, wg;  // wg is zero on Kronrod-only nodes
};

const Rule& rule() {
    static const Rule r = [] {
        using K = boost::math::quadrature::gauss_kronrod<double, 15>;
        using G = boost::math::quadrature::gauss<double, 7>;
        Rule out;
        out.x.assign(K::abscissa().begin(), K::abscissa().end());
        out.wk.assign(K::weights().begin(), K::weights().end());
        out.wg.assign(out.x.size(), 0.0);
        const auto& gx = G::abscissa();
        const auto& gw = G::weights();
        for (std::size_t i = 0; i < gx.size(); ++i)
            for (std::size_t k = 0; k < out.x.size(); ++k)
                if (std::abs(out.x[k] - gx[i]) < 1e-14) out.wg[k] = gw[i];
        return out;
    }();
    return r;
}

struct Panel {
    double a, b;
    std::vector<double> value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel evaluate(const VectorIntegrand& f, std::size_t dim, double a, double b, std::size_t& evals,
               std::vector<double>& buf) {
    const Rule& r = rule();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    std::vector<double> k(dim, 0.0), g(dim, 0.0);
    auto accumulate = [&](double x, double wk, double wg) {
        f(x, buf);
        ++evals;
        for (std::size_t i = 0; i < dim; ++i) {
            k[i] += wk * buf[i];
            g[i] += wg * buf[i];
        }
    };
    accumulate(c, r.wk[0], r.wg[0]);
    for (std::size_t n = 1; n < r.x.size(); ++n) {
        accumulate(c - h * r.x[n], r.wk[n], r.wg[n]);
        accumulate(c + h * r.x[n], r.wk[n], r.wg[n]);
    }
    double err = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        k[i] *= h;
        err += std::abs(k[i] - h * g[i]);
    }
    return {a, b, std::move(k), err};
}

}  // namespace

QuadratureResult integrate_adaptive(const VectorIntegrand& f, std::size_t dim, double a, double b,
                                    double abs_tol, std::size_t max_panels,
                                    std::size_t initial_panels) {
    if (!(b > a)) throw std::invalid_argument("integrate_adaptive: empty interval");
    QuadratureResult res;
    std::vector<double> buf(dim);
    std::priority_queue<Panel> queue;
    initial_panels = std::max<std::size_t>(initial_panels, 1);
    for (std::size_t i = 0; i < initial_panels; ++i) {
        double lo = a + (b - a) * static_cast<double>(i) / static_cast<double>(initial_panels);
        double hi = a + (b - a) * static_cast<double>(i + 1) / static_cast<double>(initial_panels);
        queue.push(evaluate(f, dim, lo, hi, res.evaluations, buf));
    }
    // the queue is not iterable, so the error sum is tracked alongside it
    double err_sum = 0.0;
    {
        std::priority_queue<Panel> copy = queue;
        for (; !copy.empty(); copy.pop()) err_sum += copy.top().error;
    }
    while (err_sum > abs_tol && queue.size() < max_panels) {
        Panel worst = queue.top();
        queue.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {  // interval exhausted
            queue.push(std::move(worst));
            break;
        }
        Panel left = evaluate(f, dim, worst.a, mid, res.evaluations, buf);
        Panel right = evaluate(f, dim, mid, worst.b, res.evaluations, buf);
        err_sum += left.error + right.error - worst.error;
        queue.push(std::move(left));
        queue.push(std::move(right));
    }
    res.value.assign(dim, 0.0);
    res.panels = queue.size();
    double err = 0.0;
    while (!queue.empty()) {
        const Panel& p = queue.top();
        for (std::size_t i = 0; i < dim; ++i) res.value[i] += p.value[i];
        err += p.error;
        queue.pop();
    }
    res.error = err;
    res.converged = err <= abs_tol;
    return res;
}

}  // namespace combwalk
