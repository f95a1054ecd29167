#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace combwalk {

// Raised when two computations that must agree do not (e.g. a bound-state
// count that disagrees with the counting formula). Maps to CLI exit code 3.
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegeneracyError : public std::runtime_error {
public:
    DegeneracyError(const std::string& what, std::vector<std::size_t> cluster)
        : std::runtime_error(what), cluster_(std::move(cluster)) {}
    const std::vector<std::size_t>& cluster() const { return cluster_; }

private:
    std::vector<std::size_t> cluster_;
};

class SingularThetaError : public std::runtime_error {
public:
    SingularThetaError(const std::string& what, double theta)
        : std::runtime_error(what), theta_(theta) {}
    double theta() const { return theta_; }

private:
    double theta_;
};

}  // namespace combwalk
