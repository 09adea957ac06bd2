#include "inhomog/symbols.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace inhomog {

InhomogeneitySequence::InhomogeneitySequence(std::vector<double> values, double inf, double sup)
    : values_(std::move(values)), inf_(inf), sup_(sup) {
    if (!(inf_ > 0.0) || !std::isfinite(sup_) || sup_ < inf_)
        throw DomainError("inhomogeneity bounds must satisfy 0 < inf <= sup < inf");
    for (double v : values_)
        if (v < inf_ || v > sup_)
            throw DomainError("inhomogeneity value " + std::to_string(v) + " outside declared bounds");
}

InhomogeneitySequence InhomogeneitySequence::constant(double value, std::size_t length) {
    return InhomogeneitySequence(std::vector<double>(length, value), value, value);
}

InhomogeneitySequence InhomogeneitySequence::periodic(const std::vector<double>& pattern,
                                                      std::size_t length) {
    if (pattern.empty()) throw DomainError("empty periodic pattern");
    std::vector<double> v(length);
    for (std::size_t i = 0; i < length; ++i) v[i] = pattern[i % pattern.size()];
    auto [lo, hi] = std::minmax_element(pattern.begin(), pattern.end());
    return InhomogeneitySequence(std::move(v), *lo, *hi);
}

double InhomogeneitySequence::operator[](std::size_t x) const {
    if (x >= values_.size())
        throw std::out_of_range("site " + std::to_string(x) + " beyond stored prefix of length " +
                                std::to_string(values_.size()));
    return values_[x];
}

double InhomogeneitySequence::mean() const {
    if (values_.empty()) return 0.0;
    return std::accumulate(values_.begin(), values_.end(), 0.0) / double(values_.size());
}

cplx char_poly(std::size_t x, cplx z, const InhomogeneitySequence& a) {
    if (x > a.size())
        throw std::out_of_range("char_poly index " + std::to_string(x) + " beyond stored prefix");
    cplx p = 1.0;
    for (std::size_t k = 0; k < x; ++k) p *= 1.0 - z / a[k];
    return p;
}

std::vector<cplx> char_poly_table(std::size_t count, cplx z, const InhomogeneitySequence& a) {
    if (count > a.size())
        throw std::out_of_range("char_poly index " + std::to_string(count) + " beyond stored prefix");
    std::vector<cplx> out(count + 1);
    out[0] = 1.0;
    for (std::size_t k = 0; k < count; ++k) out[k + 1] = out[k] * (1.0 - z / a[k]);
    return out;
}

Symbol Symbol::canonical() const {
    Symbol s = *this;
    std::sort(s.alphas.begin(), s.alphas.end());
    std::sort(s.betas.begin(), s.betas.end());
    s.alphas.erase(std::remove(s.alphas.begin(), s.alphas.end(), 0.0), s.alphas.end());
    s.betas.erase(std::remove(s.betas.begin(), s.betas.end(), 0.0), s.betas.end());
    return s;
}

bool Symbol::is_identity() const {
    Symbol c = canonical();
    return c.alphas.empty() && c.betas.empty() && c.t == 0.0;
}

bool Symbol::operator==(const Symbol& other) const {
    Symbol x = canonical(), y = other.canonical();
    return x.alphas == y.alphas && x.betas == y.betas && x.t == y.t;
}

Symbol Symbol::operator*(const Symbol& other) const {
    Symbol s = *this;
    s.alphas.insert(s.alphas.end(), other.alphas.begin(), other.alphas.end());
    s.betas.insert(s.betas.end(), other.betas.begin(), other.betas.end());
    s.t += other.t;
    return s.canonical();
}

void Symbol::validate(const InhomogeneitySequence& a, bool strict_beta) const {
    for (double al : alphas)
        if (al < 0.0 || al * a.sup() > 1.0 + 1e-15)
            throw DomainError("alpha " + std::to_string(al) + " outside [0, 1/sup(a)]");
    for (double b : betas) {
        if (b < 0.0) throw DomainError("negative beta " + std::to_string(b));
        double spread = a.sup() - a.inf();
        if (strict_beta && spread > 0.0 && b * spread >= 1.0)
            throw DomainError("beta " + std::to_string(b) + " not below 1/(sup-inf)");
    }
    if (t < 0.0) throw DomainError("negative pure-birth time");
}

cplx symbol_eval(const Symbol& f, cplx z) {
    cplx v = std::exp(-f.t * z);
    for (double al : f.alphas) v *= 1.0 - al * z;
    for (double b : f.betas) {
        cplx d = 1.0 + b * z;
        if (std::abs(d) == 0.0) throw PoleError("symbol evaluated at its pole -1/beta", b);
        v /= d;
    }
    return v;
}

DriftKind parse_drift_kind(const std::string& s) {
    if (s == "pb") return DriftKind::pb;
    if (s == "B") return DriftKind::B;
    if (s == "g") return DriftKind::g;
    throw DomainError("unknown drift kind '" + s + "'");
}

std::string to_string(DriftKind k) {
    switch (k) {
        case DriftKind::pb: return "pb";
        case DriftKind::B: return "B";
        case DriftKind::g: return "g";
    }
    return "?";
}

void validate_gamma(DriftKind kind, double gamma) {
    bool ok = false;
    switch (kind) {
        case DriftKind::pb: ok = gamma >= 0.0; break;
        case DriftKind::B: ok = gamma > 0.0 && gamma <= 1.0; break;
        case DriftKind::g: ok = gamma >= 1.0; break;
    }
    if (!ok || !std::isfinite(gamma))
        throw DomainError("gamma " + std::to_string(gamma) + " outside the range for kind " +
                          to_string(kind));
}

double hgamma_eval(DriftKind kind, double gamma, std::size_t x, const InhomogeneitySequence& a) {
    validate_gamma(kind, gamma);
    double z = 0.0;
    switch (kind) {
        case DriftKind::pb: z = -gamma; break;
        case DriftKind::B: z = 1.0 - 1.0 / gamma; break;
        case DriftKind::g: z = 1.0 / gamma - 1.0; break;
    }
    return char_poly(x, z, a).real();
}

}  // namespace inhomog
