#ifndef EMHD_ERRORS_HPP
#define EMHD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace emhd {

struct InvalidParams : std::runtime_error {
    explicit InvalidParams(const std::string& m) : std::runtime_error(m) {}
};

struct UnsupportedOrder : std::runtime_error {
    explicit UnsupportedOrder(const std::string& m) : std::runtime_error(m) {}
};

struct FlowMapDomainError : std::runtime_error {
    explicit FlowMapDomainError(const std::string& m) : std::runtime_error(m) {}
};

struct IntegratorFailure : std::runtime_error {
    explicit IntegratorFailure(const std::string& m) : std::runtime_error(m) {}
};

struct QuadratureFailure : std::runtime_error {
    explicit QuadratureFailure(const std::string& m) : std::runtime_error(m) {}
};

struct StepTooLarge : std::runtime_error {
    explicit StepTooLarge(const std::string& m) : std::runtime_error(m) {}
};

struct OverflowError : std::runtime_error {
    explicit OverflowError(const std::string& m) : std::runtime_error(m) {}
};

// Carries the worst sampled point of a failed bound assertion.
struct BoundViolation : std::runtime_error {
    double worst_value;
    double wx, wy, wz, wt;
    BoundViolation(const std::string& m, double v, double x, double y, double z, double t)
        : std::runtime_error(m), worst_value(v), wx(x), wy(y), wz(z), wt(t) {}
};

struct CFLViolation : std::runtime_error {
    explicit CFLViolation(const std::string& m) : std::runtime_error(m) {}
};

struct GridTooCoarse : std::runtime_error {
    explicit GridTooCoarse(const std::string& m) : std::runtime_error(m) {}
};

struct SamplingError : std::runtime_error {
    explicit SamplingError(const std::string& m) : std::runtime_error(m) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

} // namespace emhd

#endif
