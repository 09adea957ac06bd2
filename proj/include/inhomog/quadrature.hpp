#pragma once

#include <functional>

#include "inhomog/toeplitz.hpp"

namespace inhomog {

using CVector = Eigen::VectorXcd;

// Fills out[i] = F_i(z) for every row i.
using RowFiller = std::function<void(cplx z, CVector& out)>;

// R(i, j) = (1/2 pi i)^2 \oint_outer dw \oint_inner du F_i(w) G_j(u) / (w - u),
// trapezoid rule with `points` nodes on each circle.
CMatrix nested_integral(const ContourSpec& outer, const ContourSpec& inner, const RowFiller& F, int rows,
                        const RowFiller& G, int cols, int points);

// Doubles the node count from 64 until every entry moves by at most tol * max(1, |R|)
// above its roundoff floor (64 eps sum|F| sum|G| / gap), which `roundoff` receives.
CMatrix nested_integral_adaptive(const ContourSpec& outer, const ContourSpec& inner, const RowFiller& F,
                                 int rows, const RowFiller& G, int cols, double tol = 1e-12,
                                 int max_points = 4096, QuadDiagnostics* diag = nullptr,
                                 Matrix* roundoff = nullptr);

// v(i) = (1/2 pi i) \oint F_i(w) dw, adaptive as above.
CVector circle_integral_adaptive(const ContourSpec& c, const RowFiller& F, int rows, double tol = 1e-12,
                                 int max_points = 1 << 14, QuadDiagnostics* diag = nullptr);

}  // namespace inhomog
