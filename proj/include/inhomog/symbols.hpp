#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace inhomog {

using cplx = std::complex<double>;

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct PoleError : std::domain_error {
    double beta;
    PoleError(const std::string& what, double b) : std::domain_error(what), beta(b) {}
};

// Finite prefix of the inhomogeneity field plus declared bounds.
class InhomogeneitySequence {
public:
    InhomogeneitySequence(std::vector<double> values, double inf, double sup);

    static InhomogeneitySequence constant(double value, std::size_t length);
    // values repeated until `length` entries are stored; bounds from the pattern
    static InhomogeneitySequence periodic(const std::vector<double>& pattern, std::size_t length);

    double operator[](std::size_t x) const;
    std::size_t size() const { return values_.size(); }
    double inf() const { return inf_; }
    double sup() const { return sup_; }
    const std::vector<double>& values() const { return values_; }
    double mean() const;

private:
    std::vector<double> values_;
    double inf_;
    double sup_;
};

// p_x(z) = prod_{k<x} (1 - z/a_k)
cplx char_poly(std::size_t x, cplx z, const InhomogeneitySequence& a);
// p_x evaluated for every x in [0, count]
std::vector<cplx> char_poly_table(std::size_t count, cplx z, const InhomogeneitySequence& a);

// f(z) = prod (1 - alpha z) prod (1 + beta z)^{-1} exp(-t z)
struct Symbol {
    std::vector<double> alphas;
    std::vector<double> betas;
    double t = 0.0;

    static Symbol identity() { return {}; }
    static Symbol bernoulli(double alpha) { return Symbol{{alpha}, {}, 0.0}; }
    static Symbol geometric(double beta) { return Symbol{{}, {beta}, 0.0}; }
    static Symbol purebirth(double t) { return Symbol{{}, {}, t}; }

    Symbol canonical() const;
    bool is_identity() const;
    bool operator==(const Symbol& other) const;
    Symbol operator*(const Symbol& other) const;

    // alpha <= 1/sup; betas, if `strict_beta`, below 1/(sup - inf)
    void validate(const InhomogeneitySequence& a, bool strict_beta) const;
};

cplx symbol_eval(const Symbol& f, cplx z);

enum class DriftKind { pb, B, g };

DriftKind parse_drift_kind(const std::string& s);
std::string to_string(DriftKind k);
void validate_gamma(DriftKind kind, double gamma);

double hgamma_eval(DriftKind kind, double gamma, std::size_t x, const InhomogeneitySequence& a);

}  // namespace inhomog
