#include "combwalk/comb.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "combwalk/parallel.hpp"
#include "combwalk/rng.hpp"

namespace combwalk {

std::string to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

Boundary boundary_from_string(std::string_view s) {
    if (s == "open") return Boundary::open;
    if (s == "periodic") return Boundary::periodic;
    throw std::invalid_argument("unknown boundary '" + std::string(s) + "'");
}

std::size_t CombConfig::n_teeth() const {
    return static_cast<std::size_t>(std::count(chi.begin(), chi.end(), std::uint8_t{1}));
}

std::string CombConfig::occupancy() const {
    std::string s(n_sites, '0');
    for (std::size_t i = 0; i < n_sites; ++i)
        if (chi[i]) s[i] = '1';
    return s;
}

static void check_size(std::size_t n, Boundary b) {
    if (n == 0) throw std::invalid_argument("comb needs at least one site");
    if (b == Boundary::periodic && n < 3)
        throw std::invalid_argument("periodic comb needs at least three sites");
}

CombConfig sample_comb(double p, std::size_t n_sites, Boundary boundary, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("hole probability outside [0,1]");
    check_size(n_sites, boundary);
    CombConfig c;
    c.n_sites = n_sites;
    c.boundary = boundary;
    c.hole_prob = p;
    c.seed = seed;
    c.chi.resize(n_sites);
    Engine eng = make_engine(seed);
    for (auto& x : c.chi) x = uniform01(eng) < p ? 0 : 1;
    return c;
}

CombConfig comb_from_string(std::string_view occ, Boundary boundary) {
    check_size(occ.size(), boundary);
    CombConfig c;
    c.n_sites = occ.size();
    c.boundary = boundary;
    c.chi.resize(occ.size());
    for (std::size_t i = 0; i < occ.size(); ++i) {
        char ch = occ[i];
        if (ch == '1' || ch == 'T' || ch == 't')
            c.chi[i] = 1;
        else if (ch == '0' || ch == 'H' || ch == 'h')
            c.chi[i] = 0;
        else
            throw std::invalid_argument("occupancy string may only contain 0/1/T/H");
    }
    return c;
}

CombConfig complement(const CombConfig& comb) {
    CombConfig c = comb;
    for (auto& x : c.chi) x = x ? 0 : 1;
    c.hole_prob = 1.0 - comb.hole_prob;
    return c;
}

std::uint64_t occupancy_digest(const CombConfig& comb) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](unsigned char b) {
        h ^= b;
        h *= 0x100000001b3ULL;
    };
    for (auto x : comb.chi) feed(x ? '1' : '0');
    feed(comb.periodic() ? 'P' : 'O');
    for (int s = 0; s < 64; s += 8) feed(static_cast<unsigned char>(comb.n_sites >> s));
    return h;
}

RunLengths run_lengths(const CombConfig& comb) {
    RunLengths r;
    const std::size_t n = comb.n_sites;
    if (n == 0) return r;
    auto push = [&r](bool tooth, std::size_t len) {
        if (tooth) {
            r.tooth_runs.push_back(len);
            if (len % 2 == 1) ++r.n_t_odd;
        } else {
            r.hole_runs.push_back(len);
        }
    };
    std::size_t start = 0;
    if (comb.periodic()) {
        // Rotate so that a run boundary sits at index 0; a uniform cycle is a
        // single run.
        std::size_t b = 0;
        while (b < n && comb.chi[b] == comb.chi[(b + n - 1) % n]) ++b;
        if (b == n) {
            push(comb.chi[0] != 0, n);
            return r;
        }
        start = b;
    }
    std::size_t len = 1;
    for (std::size_t k = 1; k < n; ++k) {
        std::size_t i = (start + k) % n;
        std::size_t prev = (start + k - 1) % n;
        if (comb.chi[i] == comb.chi[prev]) {
            ++len;
        } else {
            push(comb.chi[prev] != 0, len);
            len = 1;
        }
    }
    push(comb.chi[(start + n - 1) % n] != 0, len);
    return r;
}

namespace {

// Positions of the chosen species in chain coordinates: 1..N for open combs
// (plus the endpoints 0 and N+1), 0..N-1 for periodic ones.
bool k_chain(const CombConfig& comb, unsigned k, bool teeth) {
    if (k < 2) return false;
    const std::size_t L = comb.length();
    if (L % k != 0) return false;
    if (!comb.periodic()) {
        for (std::size_t i = 0; i < comb.n_sites; ++i)
            if ((comb.chi[i] != 0) == teeth && (i + 1) % k != 0) return false;
        return true;
    }
    long ref = -1;
    for (std::size_t i = 0; i < comb.n_sites; ++i) {
        if ((comb.chi[i] != 0) != teeth) continue;
        long r = static_cast<long>(i % k);
        if (ref < 0)
            ref = r;
        else if (r != ref)
            return false;
    }
    return true;
}

bool is_prime(unsigned k) {
    if (k < 2) return false;
    for (unsigned d = 2; d * d <= k; ++d)
        if (k % d == 0) return false;
    return true;
}

}  // namespace

bool is_k_tooth_chain(const CombConfig& comb, unsigned k) { return k_chain(comb, k, true); }
bool is_k_hole_chain(const CombConfig& comb, unsigned k) { return k_chain(comb, k, false); }

ChainClass classify_chain(const CombConfig& comb) {
    ChainClass c;
    const std::size_t nt = comb.n_teeth();
    if (nt == 0 || nt == comb.n_sites) {
        c.uniform = true;
        c.is_generic = false;
        return c;
    }
    const auto L = static_cast<unsigned>(comb.length());
    for (unsigned k = 2; k <= L; ++k) {
        if (!is_prime(k)) continue;
        if (is_k_tooth_chain(comb, k)) c.k_tooth.push_back(k);
        if (is_k_hole_chain(comb, k)) c.k_hole.push_back(k);
    }
    c.is_generic = c.k_tooth.empty() && c.k_hole.empty();
    return c;
}

StringDensities string_density_stats(double p, std::size_t n_sites, std::size_t n_samples,
                                     std::uint64_t seed, std::size_t max_len, unsigned threads) {
    if (n_samples == 0) throw std::invalid_argument("string_density_stats: no samples");
    const std::size_t nl = std::min(max_len, n_sites >= 2 ? n_sites - 2 : 0);
    // per-sample densities: [hole 1..nl][tooth 1..nl][odd][even]
    const std::size_t width = 2 * nl + 2;
    std::vector<double> per(n_samples * width, 0.0);
    parallel_for(n_samples, threads, [&](std::size_t s) {
        CombConfig c = sample_comb(p, n_sites, Boundary::periodic, derive_seed(seed, s));
        RunLengths r = run_lengths(c);
        double* row = per.data() + s * width;
        const double inv = 1.0 / static_cast<double>(n_sites);
        for (auto l : r.hole_runs)
            if (l <= nl) row[l - 1] += inv;
        for (auto l : r.tooth_runs) {
            if (l <= nl) row[nl + l - 1] += inv;
            // a single run filling the whole cycle is not a bounded string
            if (l == n_sites) continue;
            row[2 * nl + (l % 2 == 1 ? 0 : 1)] += inv;
        }
    });
    StringDensities out;
    out.p = p;
    out.n_sites = n_sites;
    out.n_samples = n_samples;
    std::vector<RunningStats> acc(width);
    for (std::size_t s = 0; s < n_samples; ++s)
        for (std::size_t j = 0; j < width; ++j) acc[j].add(per[s * width + j]);
    auto me = [&](std::size_t j) { return MeanError{acc[j].mean(), acc[j].std_error()}; };
    for (std::size_t l = 0; l < nl; ++l) {
        out.hole.push_back(me(l));
        out.tooth.push_back(me(nl + l));
    }
    out.tooth_odd = me(2 * nl);
    out.tooth_even = me(2 * nl + 1);
    return out;
}

double hole_string_density(double p, std::size_t l) {
    return (1 - p) * (1 - p) * std::pow(p, static_cast<double>(l));
}

double tooth_string_density(double p, std::size_t l) {
    return p * p * std::pow(1 - p, static_cast<double>(l));
}

double odd_tooth_string_density(double p) { return p * (1 - p) / (2 - p); }

}  // namespace combwalk
