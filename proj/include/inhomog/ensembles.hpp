#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>
#include <vector>

#include "inhomog/interlacing.hpp"
#include "inhomog/toeplitz.hpp"

namespace inhomog {

using Rational = boost::multiprecision::cpp_rational;

// N non-intersecting paths started at 0..pN-1 and ended at pM..pM+pN-1 after L steps;
// step r uses f_r. Scalar steps for p = 1, block steps for p >= 2.
struct EnsembleSpec {
    int N = 1;
    int M = 0;
    int p = 1;
    std::vector<Symbol> steps;
    std::vector<BlockSymbol> block_steps;
    ContourSpec block_contour;  // used for block entries only
    InhomogeneitySequence a = InhomogeneitySequence::constant(1.0, 1);

    int L() const { return int(p == 1 ? steps.size() : block_steps.size()); }
    // sites [0, extent()) carry every path at every time
    int extent() const { return p * (M + N); }
    void validate() const;
};

struct NearSingularError : DomainError {
    double det;
    NearSingularError(const std::string& what, double d) : DomainError(what), det(d) {}
};

struct BudgetError : DomainError {
    using DomainError::DomainError;
};

// T_{f_r} on [0, size), and the product over steps r0..r1-1.
Matrix step_matrix(const EnsembleSpec& spec, int r, int size);
Matrix step_product(const EnsembleSpec& spec, int r0, int r1, int size);

// G(k, m) = T_{f_{0,L}}(k, pM + m), from products of step matrices.
Matrix gram(const EnsembleSpec& spec);
// The same matrix with each entry by contour quadrature of the product symbol.
Matrix gram_contour(const EnsembleSpec& spec);
// Throws NearSingularError when |det G| < 1e-12 times the product of row norms.
void check_gram(const Matrix& G);

struct SpacetimePoint {
    int r = 1;
    int x = 0;
    auto operator<=>(const SpacetimePoint&) const = default;
};

// K[(r,x);(r',y)] = -1_{r>r'} T_{f_{r',r}}(y,x) + sum T_{f_{0,r}}(k,x) G^{-T}(k,m) T_{f_{r',L}}(y,pM+m)
class FixedEndpointKernel {
public:
    explicit FixedEndpointKernel(const EnsembleSpec& spec);
    double operator()(SpacetimePoint u, SpacetimePoint v) const;
    Matrix matrix(const std::vector<SpacetimePoint>& pts) const;
    double correlation(const std::vector<SpacetimePoint>& pts) const;
    const Matrix& gram_matrix() const { return G_; }

private:
    int L_, M_, n_, size_;
    Matrix G_, Ginv_;
    std::vector<Matrix> from_start_;  // T_{f_{0,r}}
    std::vector<Matrix> to_end_;      // T_{f_{r,L}}
    std::vector<std::vector<Matrix>> between_;  // T_{f_{r',r}}, r' < r
};

double kernel_fixed_endpoints(const EnsembleSpec& spec, SpacetimePoint u, SpacetimePoint v);

// p = 1: the double-contour form with the reproducing kernel R_N. The double integral
// separates along the finite sum in R_N, so every T entry is a contour quadrature.
double kernel_reproducing(const EnsembleSpec& spec, SpacetimePoint u, SpacetimePoint v);

// Exact law of the paths at times 1..L-1.
struct PathLaw {
    int N = 0;
    std::vector<std::vector<Config>> tuples;  // levels at times 1..L-1
    std::vector<double> prob;
    std::vector<Rational> exact_prob;  // filled when `exact`
    bool exact = false;
    long candidates = 0;

    double one_point(SpacetimePoint u) const;
    double correlation(const std::vector<SpacetimePoint>& pts) const;
    Rational exact_mass() const;
};

// Every tuple of configurations below extent() weighted by the product of
// determinants. Bernoulli and geometric steps are done in rationals.
PathLaw brute_force_marginals(const EnsembleSpec& spec, long budget = 1000000);

// Limit N -> infinity of the kernel near the lower boundary, p = 1.
struct LimitOptions {
    double c = -1.0;          // bound |a - 1| <= c; negative: the tightest one from a
    double inner = 1.0 - 1e-2;  // |z|
    double outer = 1.0 + 1e-2;  // |w|
    int points = 512;
    int terms = 120;
};

struct Factorization {
    double c = 0.0;
    std::vector<double> big_alphas;  // the M factors moved into S_-
    Symbol rest;                     // f_{0,L} without them
    cplx s_minus(cplx z) const;
    cplx s_plus(cplx z) const;
};
// Checks the a-bounds and the alpha/beta windows; DomainError names the failed one.
Factorization factorize(const EnsembleSpec& spec, double c = -1.0);

class LimitKernel {
public:
    LimitKernel(const EnsembleSpec& spec, LimitOptions opt = {});
    double operator()(SpacetimePoint u, SpacetimePoint v) const;
    const Factorization& factorization() const { return fac_; }

private:
    EnsembleSpec spec_;
    LimitOptions opt_;
    Factorization fac_;
};

double kernel_infty(const EnsembleSpec& spec, SpacetimePoint u, SpacetimePoint v, LimitOptions opt = {});

struct LadderReport {
    std::vector<int> Ns;
    std::vector<double> deviation;  // max over the window
    bool strictly_decreasing() const;
};
// Window: times 1..L-1 and sites [0, width).
LadderReport ladder_deviation(const EnsembleSpec& spec, const std::vector<int>& Ns, int width,
                              LimitOptions opt = {});

}  // namespace inhomog
