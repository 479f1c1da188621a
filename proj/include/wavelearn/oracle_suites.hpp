#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wavelearn::oracle {

struct SuiteCase {
    std::string name;
    double error = 0.0;
    double tolerance = 0.0;

    bool passed() const { return error <= tolerance; }
};

struct SuiteReport {
    std::string suite;
    std::vector<SuiteCase> cases;

    bool passed() const;
    double max_error() const;
    std::vector<SuiteCase> failures() const;
};

// Closed forms against quadrature on `cases` random geometries
// (S <= 8, D/T in {4, 8, 16}). Errors are relative to the natural scale of
// each quantity: the largest oracle entry of a matrix, the Cauchy-Schwarz
// bound of a correlation, the zero-lag noise variance.
SuiteReport quadrature_suite(int cases = 100, std::uint64_t seed = 1, double tolerance = 1e-6);

// Reverse-mode gradients of every primitive and of the end-to-end BCE of a
// 16-symbol AWGN link with a 2-block receiver against central differences.
SuiteReport gradient_suite(std::uint64_t seed = 2, double tolerance = 1e-4);

// Off-zero ISI of matched windowed-RRC pairs.
SuiteReport nyquist_suite(double tolerance = 1e-3);

// Empirical noise covariance of the white-noise, banded-Cholesky and
// differentiable samplers against the closed form.
SuiteReport noise_suite(std::uint64_t seed = 3, std::size_t trials = 20000);

SuiteReport run_suite(const std::string& name, std::uint64_t seed);

}  // namespace wavelearn::oracle
