#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <numbers>

#include "combwalk/chainspec.hpp"
#include "combwalk/errors.hpp"
#include "doctest.h"

using namespace combwalk;

TEST_CASE("free chain closed form") {
    for (std::size_t n : {1u, 2u, 7u, 30u}) {
        CombConfig c = sample_comb(0.3, n, Boundary::open, n);
        ChainSpectrum s = eigenvalues(ChainHamiltonian{c, 0.0}, false);
        for (std::size_t k = 1; k <= n; ++k)
            CHECK(std::abs(s.values[k - 1] + 2 * std::cos(k * std::numbers::pi / (n + 1.0))) < 4e-12);
    }
}

TEST_CASE("spectrum support and component sizes") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        CombConfig c = sample_comb(0.5, 10 + seed, seed % 2 ? Boundary::open : Boundary::periodic, seed);
        for (double v : {-7.0, -1.5, 0.5, 3.0, 10.0}) {
            ChainHamiltonian h{c, v};
            ChainSpectrum s = eigenvalues(h, true);
            std::size_t high = 0;
            for (std::size_t a = 0; a < s.values.size(); ++a) {
                double e = s.values[a];
                bool in_low = e >= -2 - 1e-9 && e <= 2 + 1e-9;
                bool in_high = e >= v - 2 - 1e-9 && e <= v + 2 + 1e-9;
                CHECK((in_low || in_high));
                if (std::abs(v) > 4 && in_high) ++high;
                CHECK(residual_inf(h.op(), e, s.vectors[a]) < 1e-9);
            }
            if (std::abs(v) > 4) CHECK(high == c.n_teeth());
        }
    }
}

TEST_CASE("eigenvectors orthonormal and open spectra simple") {
    CombConfig c = sample_comb(0.5, 48, Boundary::open, 5);
    ChainSpectrum s = eigenvalues(ChainHamiltonian{c, 2.5}, true);
    for (std::size_t a = 0; a < 48; ++a) {
        if (a > 0) CHECK(s.values[a] - s.values[a - 1] > 0);
        for (std::size_t b = 0; b <= a; ++b) {
            double d = 0;
            for (std::size_t i = 0; i < 48; ++i) d += s.vectors[a][i] * s.vectors[b][i];
            CHECK(std::abs(d - (a == b)) < 1e-10);
        }
    }
}

TEST_CASE("spectral flow slopes and symmetries") {
    std::vector<double> grid;
    for (int g = 0; g <= 60; ++g) grid.push_back(-6.0 + 0.2 * g);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CombConfig c = sample_comb(0.5, 8 + 4 * seed, Boundary::open, seed + 100);
        SpectralFlow f = spectral_flow(c, grid, 2);
        for (const auto& row : f.slopes)
            for (double s : row) {
                CHECK(s >= -1e-9);
                CHECK(s <= 1 + 1e-9);
            }
        CombConfig cc = complement(c);
        for (double v : {0.7, 3.3, 9.0}) {
            auto e = eigenvalues(ChainHamiltonian{c, v}, false).values;
            auto em = eigenvalues(ChainHamiltonian{c, -v}, false).values;
            auto ec = eigenvalues(ChainHamiltonian{cc, v}, false).values;
            const std::size_t n = e.size();
            for (std::size_t a = 0; a < n; ++a) {
                CHECK(std::abs(em[a] + e[n - 1 - a]) < 1e-10);
                CHECK(std::abs(ec[a] - (v - e[n - 1 - a])) < 1e-10);
            }
        }
    }
}

TEST_CASE("exact derivative") {
    CHECK(de_dv_exact(ChainHamiltonian{comb_from_string("111111", Boundary::open), 1.3}, 2) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(de_dv_exact(ChainHamiltonian{comb_from_string("000000", Boundary::open), 1.3}, 4) ==
          doctest::Approx(0.0));
    CombConfig c = sample_comb(0.5, 32, Boundary::open, 17);
    const double h = 1e-5;
    for (std::size_t level : {0u, 7u, 31u}) {
        double exact = de_dv_exact(ChainHamiltonian{c, 1.0}, level);
        double up = eigenvalues(ChainHamiltonian{c, 1.0 + h}, false).values[level];
        double dn = eigenvalues(ChainHamiltonian{c, 1.0 - h}, false).values[level];
        CHECK(std::abs(exact - (up - dn) / (2 * h)) < 1e-6);
    }
    // degenerate level on a periodic comb
    CombConfig cyc = comb_from_string("000000", Boundary::periodic);
    CHECK_THROWS_AS(de_dv_exact(ChainHamiltonian{cyc, 1.0}, 1), DegeneracyError);
}

TEST_CASE("counting formula examples") {
    CHECK(n_e_gt4_formula(comb_from_string("000010000", Boundary::open)) == 1);
    CHECK(n_e_gt4_formula(comb_from_string("11", Boundary::open)) == 1);
    CHECK(n_e_gt4_formula(comb_from_string("10101010", Boundary::periodic)) == 3);
    CHECK(n_e_gt4_formula(comb_from_string("0000", Boundary::open)) == 0);
    // open all-teeth comb with odd N is a 2-hole chain (endpoints act as holes)
    CHECK(n_e_gt4_formula(comb_from_string("11111", Boundary::open)) == 2);
    CHECK(n_e_gt4_formula(comb_from_string(std::string(200, '1'), Boundary::periodic)) == 99);
    CHECK(n_e_gt4_formula(comb_from_string(std::string(202, '1'), Boundary::periodic)) == 101);
}

TEST_CASE("penrose coordinates") {
    auto [v0, e0] = penrose(0.0, 0.0);
    CHECK(v0 == 0.0);
    CHECK(e0 == 0.0);
    CHECK(penrose(3.7, 3.7).first == 0.0);
    auto [vb, eb] = penrose(1e12, 2.0);
    CHECK(std::abs(vb - std::numbers::pi) < 1e-9);
    CHECK(std::abs(eb - std::numbers::pi / 2) < 1e-15);
}

TEST_CASE("lemma consequences") {
    CombConfig t3 = comb_from_string("00100", Boundary::open);
    LemmaReport r = lemma_invariant_checks(t3, {0.0, 1.0, 5.0, 50.0});
    CHECK(r.ok());
    CHECK(r.checks > 0);
    for (double v : {0.0, 1.0, 5.0, 50.0}) {
        auto e = eigenvalues(ChainHamiltonian{t3, v}, false).values;
        double d = 1e9;
        for (double x : e) d = std::min(d, std::abs(x + 1.0));
        CHECK(d < 1e-10);
    }

    CombConfig g = sample_comb(0.5, 40, Boundary::open, 2024);
    REQUIRE(classify_chain(g).is_generic);
    CHECK(lemma_invariant_checks(g, {3.0, 5.0, 10.0}).ok());
    for (double v : {3.0, 5.0, 10.0}) {
        auto e = eigenvalues(ChainHamiltonian{g, v}, false).values;
        for (double x : e) CHECK(std::abs(x) > 1e-8);
    }

    CombConfig alt = comb_from_string("10101010", Boundary::periodic);
    auto e7 = eigenvalues(ChainHamiltonian{alt, 7.0}, false).values;
    double d = 1e9;
    for (double x : e7) d = std::min(d, std::abs(x));
    CHECK(d < 1e-10);
    CHECK(lemma_invariant_checks(alt, {0.5, 3.0, 7.0}).ok());
}

TEST_CASE("large V limit is the hole-string spectrum") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CombConfig c = sample_comb(0.5, 30, seed % 2 ? Boundary::open : Boundary::periodic, seed);
        auto e = eigenvalues(ChainHamiltonian{c, 1e6}, false).values;
        auto ref = hole_string_spectrum(c);
        REQUIRE(ref.size() == c.n_holes());
        for (std::size_t a = 0; a < ref.size(); ++a) CHECK(std::abs(e[a] - ref[a]) < 1e-3);
    }
}

TEST_CASE("invalid input") {
    CombConfig c = comb_from_string("101", Boundary::open);
    CHECK_THROWS_AS(eigenvalues(ChainHamiltonian{c, std::nan("")}, false), std::invalid_argument);
    CHECK_THROWS_AS(spectral_flow(c, {1.0}), std::invalid_argument);
}
