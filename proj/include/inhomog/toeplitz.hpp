#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "inhomog/symbols.hpp"

namespace inhomog {

using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;

struct QuadratureError : std::runtime_error {
    double residual;
    QuadratureError(const std::string& what, double r) : std::runtime_error(what), residual(r) {}
};

struct ContourSpec {
    cplx center = 0.0;
    double radius = 1.0;
    int points = 64;
};

struct QuadDiagnostics {
    int points = 0;
    double residual = 0.0;
};

inline constexpr int kMaxQuadPoints = 1 << 16;
inline constexpr double kQuadTol = 1e-11;

// Circle around [inf, sup] of the default radius, shrunk if needed so that every
// pole -1/beta stays outside by `gap` times the radius.
ContourSpec default_contour(const InhomogeneitySequence& a, const Symbol& f, double gap = 0.1);

double t_bernoulli(std::size_t x, std::size_t y, double alpha, const InhomogeneitySequence& a);
double t_geometric(std::size_t x, std::size_t y, double beta, const InhomogeneitySequence& a);
double t_purebirth(std::size_t x, std::size_t y, double t, const InhomogeneitySequence& a);

// Row x of the pure-birth semigroup on sites [x, x+len) by uniformization.
std::vector<double> purebirth_row_uniformized(std::size_t x, std::size_t len, double t,
                                              const InhomogeneitySequence& a);

cplx t_numeric(const Symbol& f, std::size_t x, std::size_t y, const InhomogeneitySequence& a,
               const ContourSpec& contour, QuadDiagnostics* diag = nullptr);

// Closed-form factor matrices on [0, L); upper triangular, so products are exact.
Matrix bernoulli_matrix(double alpha, std::size_t L, const InhomogeneitySequence& a);
Matrix geometric_matrix(double beta, std::size_t L, const InhomogeneitySequence& a);
Matrix purebirth_matrix(double t, std::size_t L, const InhomogeneitySequence& a);
Matrix t_matrix(const Symbol& f, std::size_t L, const InhomogeneitySequence& a);

// All entries on [0, L) by one shared set of quadrature nodes, doubled until every
// entry settles.
Matrix t_matrix_numeric(const Symbol& f, std::size_t L, const InhomogeneitySequence& a,
                        const ContourSpec& contour, QuadDiagnostics* diag = nullptr);

// Smallest K with sum_{y < x+K} T_f(x, y) >= 1 - eps for every x, bounded by
// the homogeneous chain at rate sup(a).
std::size_t tail_length(const Symbol& f, const InhomogeneitySequence& a, double eps = 1e-14);

double t_compose_check(const Symbol& f, const Symbol& g, const InhomogeneitySequence& a,
                       std::size_t truncation);

// Identity residuals on the truncation interior.
double row_sum_residual(const Matrix& T, std::size_t rows);
double duality_residual(const Matrix& T, const InhomogeneitySequence& a, std::size_t size);
double eigenfunction_residual(const Matrix& T, const Symbol& f, std::size_t rows, cplx lambda,
                              const InhomogeneitySequence& a);

// Change-of-basis matrix from (1-z)^m to p_k(z), and the standard Toeplitz matrix
// of f(1-z) by unit-circle quadrature.
Matrix similarity_matrix(std::size_t L, const InhomogeneitySequence& a);
Matrix standard_toeplitz(const Symbol& f, std::size_t L, int points = 1024);

struct BlockSymbol {
    int p = 1;
    std::vector<std::function<cplx(cplx)>> entries;  // row-major p*p
    std::vector<cplx> poles;                          // kept outside the contour
};

cplx t_numeric_block(const BlockSymbol& f, std::size_t x, std::size_t y,
                     const InhomogeneitySequence& a, const ContourSpec& contour);

}  // namespace inhomog
