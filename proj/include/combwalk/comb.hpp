#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "combwalk/stats.hpp"

namespace combwalk {

enum class Boundary { open, periodic };

std::string to_string(Boundary b);
Boundary boundary_from_string(std::string_view s);

// A finite comb: N active spine sites, each a tooth (half-line attached) or
// a hole. Open combs have Dirichlet zeros at positions 0 and N+1, which
// never carry teeth.
struct CombConfig {
    std::size_t n_sites = 0;
    Boundary boundary = Boundary::open;
    std::vector<std::uint8_t> chi;  // 1 = tooth
    double hole_prob = 0.0;
    std::uint64_t seed = 0;

    bool tooth(std::size_t i) const { return chi[i] != 0; }
    bool periodic() const { return boundary == Boundary::periodic; }
    std::size_t n_teeth() const;
    std::size_t n_holes() const { return n_sites - n_teeth(); }
    // L in the chain conventions: N+1 for open, N for periodic.
    std::size_t length() const { return periodic() ? n_sites : n_sites + 1; }
    std::string occupancy() const;  // '1' tooth, '0' hole
};

CombConfig sample_comb(double p, std::size_t n_sites, Boundary boundary, std::uint64_t seed);

// Builds a comb from a 0/1 occupancy string ('1' = tooth). Also accepts
// 'T'/'H'. hole_prob and seed are left at zero.
CombConfig comb_from_string(std::string_view occupancy, Boundary boundary);

CombConfig complement(const CombConfig& comb);

// FNV-1a over the occupancy string, boundary tag and size.
std::uint64_t occupancy_digest(const CombConfig& comb);

struct RunLengths {
    std::vector<std::size_t> tooth_runs;
    std::vector<std::size_t> hole_runs;
    std::size_t n_t_odd = 0;
};

RunLengths run_lengths(const CombConfig& comb);

struct ChainClass {
    std::vector<unsigned> k_tooth;
    std::vector<unsigned> k_hole;
    bool is_generic = true;
    bool uniform = false;  // all teeth or all holes
};

// Literal conditions (i) and (ii) for a k-tooth / k-hole chain, endpoints
// of open combs counted as the respective species.
bool is_k_tooth_chain(const CombConfig& comb, unsigned k);
bool is_k_hole_chain(const CombConfig& comb, unsigned k);

ChainClass classify_chain(const CombConfig& comb);

struct StringDensities {
    double p = 0.0;
    std::size_t n_sites = 0;
    std::size_t n_samples = 0;
    std::vector<MeanError> hole;   // hole[l-1]: strings of l holes per site
    std::vector<MeanError> tooth;  // tooth[l-1]
    MeanError tooth_odd;
    MeanError tooth_even;
};

// Empirical string densities per unit length on periodic combs, which makes
// the expected count of l-strings exactly N (1-p)^2 p^l for l <= N-2.
StringDensities string_density_stats(double p, std::size_t n_sites, std::size_t n_samples,
                                     std::uint64_t seed, std::size_t max_len,
                                     unsigned threads = 1);

// Exact expectations for the quantities above.
double hole_string_density(double p, std::size_t l);
double tooth_string_density(double p, std::size_t l);
double odd_tooth_string_density(double p);

}  // namespace combwalk
