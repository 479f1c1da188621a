#pragma once

#include <cstddef>
#include <vector>

#include "wavelearn/ad/tape.hpp"

namespace wavelearn::ad {

// Elementwise binary ops require identical shapes; use expand() or
// mul_scalar() to broadcast explicitly.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var neg(Var x);
Var scale(Var x, double c);
Var add_scalar(Var x, double c);
// x * s for a one-element s.
Var mul_scalar(Var x, Var s);

Var square(Var x);
Var sqrt(Var x);
Var exp(Var x);
Var log(Var x);
Var relu(Var x);  // max(x, 0); adjoint 0 at the kink
Var clamp(Var x, double lo, double hi);  // adjoint 0 where clipped
Var sigmoid(Var x);
Var tanh(Var x);
Var softplus(Var x);  // log(1 + e^x)

Var sum(Var x);
Var mean(Var x);
Var sum_axis(Var x, std::size_t axis);

// [m, k] x [k, n] -> [m, n]
Var matmul(Var a, Var b);

Var reshape(Var x, Shape shape);
// Inserts a new axis of length n at `axis`, repeating x along it.
Var expand(Var x, std::size_t axis, std::size_t n);
// out[i] = table[indices[i]] for a 1-D table.
Var gather(Var table, const std::vector<std::size_t>& indices, Shape out_shape);
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);

// x[..., C] + b[C]
Var bias_add(Var x, Var b);

// Stride-1 1-D convolutions over x[B, N, C] with zero padding so the output
// length equals N. Kernels have odd length.
//   conv1d:           w[Kw, Cin, Cout]
//   depthwise_conv1d: w[Kw, C]
//   pointwise_conv1d: w[Cin, Cout]
Var conv1d(Var x, Var w, std::size_t dilation = 1);
Var depthwise_conv1d(Var x, Var w, std::size_t dilation = 1);
Var pointwise_conv1d(Var x, Var w);

// Discrete channel convolution along the last axis of x[B, N] with taps at
// offsets first_index .. first_index + L - 1; symbols outside [0, N) count
// as zero: y[b, m] = sum_i h[i] x[b, m - first_index - i]. h is either [L]
// (shared by all rows) or [B, L].
Var tap_conv(Var x, Var h, int first_index);

// Complex values as paired real tensors.
struct ComplexVar {
    Var re;
    Var im;
};

ComplexVar complex_mul(const ComplexVar& a, const ComplexVar& b);
ComplexVar complex_add(const ComplexVar& a, const ComplexVar& b);
ComplexVar complex_conj(const ComplexVar& a);
ComplexVar complex_matmul(const ComplexVar& a, const ComplexVar& b);
Var complex_abs2(const ComplexVar& a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double c, Var x) { return scale(x, c); }
inline Var operator*(Var x, double c) { return scale(x, c); }

}  // namespace wavelearn::ad
