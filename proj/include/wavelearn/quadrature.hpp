#pragma once

#include <functional>

namespace wavelearn::quad {

using Integrand = std::function<double(double)>;

// Fixed 20-point Gauss-Legendre rule on each of `panels` equal subintervals.
double gauss_legendre(const Integrand& f, double a, double b, int panels);

// Adaptive Gauss-Kronrod (15/31) refinement on each of `panels` equal
// subintervals until the estimated error is below `abs_tol` overall.
double adaptive(const Integrand& f, double a, double b, double abs_tol, int panels = 1);

}  // namespace wavelearn::quad
