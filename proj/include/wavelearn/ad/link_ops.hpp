#pragma once

#include <Eigen/Dense>

#include "wavelearn/ad/ops.hpp"
#include "wavelearn/closed_form.hpp"
#include "wavelearn/metrics.hpp"

namespace wavelearn::ad {

// Complex vector leaf pair from coefficients.
ComplexVar complex_leaf(Tape& tape, const Eigen::VectorXcd& v);
ComplexVar complex_constant(Tape& tape, const Eigen::VectorXcd& v);
Eigen::VectorXcd complex_value(const ComplexVar& v);

// Channel taps h_l = sqrt(C(theta))/D psi^H B_l theta for the matrices
// from tap_matrices(); returns [L] real and imaginary parts.
ComplexVar filter_taps(const ComplexVar& theta, const ComplexVar& psi, const TapMatrices& b, double duration);

// Centered, unit-energy points.
ComplexVar normalize_points(const ComplexVar& raw);

// 1 / (C(theta) theta^H E theta) - 1 (scalar).
Var aclr(const ComplexVar& theta, const InbandMatrix& e);

// |x(t)|^2 for every draw in `samples` (not normalized by average power).
Var instant_power(const ComplexVar& theta, const ComplexVar& points, const PowerSamples& samples);

// Receiver noise w = Y conj(psi) / D for constant Y [rows, 2S+1].
ComplexVar project_noise(const Eigen::MatrixXcd& y, const ComplexVar& psi, double duration);

// Complex channel convolution of s[B, N] with taps [L] or [B, L].
ComplexVar apply_taps(const ComplexVar& s, const ComplexVar& h, int first_index);

}  // namespace wavelearn::ad
