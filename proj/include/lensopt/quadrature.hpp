/** @file quadrature.hpp
    @brief Gauss-Legendre rules.
*/
#pragma once

#include <vector>

namespace lensopt {

struct QuadRule1D {
    std::vector<double> nodes;   ///< in [0,1]
    std::vector<double> weights; ///< sum to 1
};

/// n-point Gauss-Legendre rule mapped to [0,1].
const QuadRule1D& gauss_legendre(int n);

/// Rule on [a,b].
QuadRule1D gauss_legendre(int n, double a, double b);

} // namespace lensopt
