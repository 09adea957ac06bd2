#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "inhomog/interlacing.hpp"
#include "inhomog/rng.hpp"
#include "inhomog/stats.hpp"

namespace inhomog {

struct DriftedWalkSpec {
    DriftKind kind = DriftKind::pb;
    double gamma = 0.0;
    InhomogeneitySequence a;
};

// a + g (pb), g a + 1 - g (B), g a + g - 1 (g)
InhomogeneitySequence shifted_sequence(DriftKind kind, double gamma, const InhomogeneitySequence& a);
// f_t: exp(-t z), (1 - z)^t, (1 + z)^{-t}; t must be a non-negative integer for B and g
Symbol base_symbol(DriftKind kind, double t);
// c_{t,g}: e^{t g}, g^{-t}, g^t
double drift_constant(DriftKind kind, double gamma, double t);
// Extra hypotheses on a for the semigroup identities: sup(a) <= 1 for B, sup - inf < 1 for g.
bool drift_hypotheses_hold(DriftKind kind, const InhomogeneitySequence& a);

// One walk with drift, from the shifted sequence.
double drifted_transition(const DriftedWalkSpec& spec, double t, int x, int y);
// The same kernel as an h-transform of the undrifted one.
double drifted_transition_doob(const DriftedWalkSpec& spec, double t, int x, int y);
// Smallest K with sum_{y < x+K} of every drifted row >= 1 - eps.
std::size_t drifted_tail(DriftKind kind, double gamma, double t, const InhomogeneitySequence& a,
                         double eps = 1e-14);

struct DegenerateParameterError : DomainError {
    using DomainError::DomainError;
};

// Sign and log|.| of det(h_{g_i}(x_j)), with columns scaled by their largest entry.
struct LogDet {
    int sign = 0;
    double log_abs = 0.0;
};
LogDet h_gamma_logdet(DriftKind kind, const std::vector<double>& gammas, const Config& x,
                      const InhomogeneitySequence& a);

// Non-intersecting semigroup with one drift per particle, on configurations below `bound`.
class DriftedSemigroup {
public:
    DriftedSemigroup(DriftKind kind, std::vector<double> gammas, double t, const InhomogeneitySequence& a,
                     int bound);
    double operator()(const Config& x, const Config& y) const;
    std::map<Config, double> row(const Config& x) const;
    int bound() const { return bound_; }

private:
    DriftKind kind_;
    std::vector<double> gammas_;
    InhomogeneitySequence a_;
    double log_c_ = 0.0;
    int bound_;
    Matrix T_;
    std::vector<std::vector<double>> logh_;
};

double drifted_semigroup(DriftKind kind, const std::vector<double>& gammas, double t, const Config& x,
                         const Config& y, const InhomogeneitySequence& a);
// Truncation large enough for rows started below `x_max` to lose less than eps.
int drifted_semigroup_bound(DriftKind kind, const std::vector<double>& gammas, double t, int x_max,
                            const InhomogeneitySequence& a, double eps = 1e-14);

// Ordering conditions on consecutive drifts that make the walks separate.
bool ordering_conditions_hold(DriftKind kind, const std::vector<double>& gammas,
                              const InhomogeneitySequence& a);

struct NonCollision {
    double value = 0.0;
    bool conditions_ok = true;  // false: value computed, interpretation not guaranteed
};
NonCollision noncollision_prob(DriftKind kind, const std::vector<double>& gammas, const Config& x,
                               const InhomogeneitySequence& a);

// P_x(X(t) = y, no collision up to t) for the independent drifted walks, by direct
// evolution of the product chain with killing. Entries below `bound` are exact up to
// the Poisson truncation in continuous time.
std::map<Config, double> killed_row(DriftKind kind, const std::vector<double>& gammas, double t,
                                    const Config& x, const InhomogeneitySequence& a, int bound);

// Independent drifted walks from x until `horizon` or the first collision.
struct DriftedPath {
    bool survived = true;
    Config at_t;    // position at time t (if survived past t)
    Config at_end;  // position at the horizon (if survived)
};
DriftedPath simulate_drifted(DriftKind kind, const std::vector<double>& gammas, const Config& x, double t,
                             double horizon, const InhomogeneitySequence& a, const RngStream& rng);

struct SurvivalEstimate {
    long replicas = 0;
    long survivors = 0;
    double p_hat = 0.0;       // fraction surviving to the horizon
    double correction = 0.0;  // mean bound on collisions after the horizon
    double sigma = 0.0;
    double lower() const { return p_hat - correction; }
    double upper() const { return p_hat; }
    bool contains(double p, double k_sigma = 4.0) const {
        return p >= lower() - k_sigma * sigma && p <= upper() + k_sigma * sigma;
    }
};
// Two pure-birth walks; collisions after the horizon are bounded by gambler's ruin for
// the homogeneous walks at rates sup(a) + g_1 and inf(a) + g_2.
SurvivalEstimate mc_survival_pb2(const std::vector<double>& gammas, const Config& x, double horizon,
                                 const InhomogeneitySequence& a, long replicas, std::uint64_t seed);

struct ConditionedReport {
    double semigroup = 0.0;  // P_t^{gamma}(x, y)
    double ratio = 0.0;      // P_y(no collision) / P_x(no collision) * killed(x, y)
    double killed = 0.0;     // from killed_row
    double killed_doob = 0.0;  // prod 1/c * prod h(y_i)/h(x_i) * det T
    double max_error() const;
    // optional Monte Carlo: law of X(t) given survival up to the horizon
    std::map<Config, long> counts;
    std::map<Config, double> exact;
    long survivors = 0;
    double max_z = 0.0;
    TestResult chi2;
};
ConditionedReport conditioned_transition_check(DriftKind kind, const std::vector<double>& gammas, double t,
                                               const Config& x, const Config& y,
                                               const InhomogeneitySequence& a, long replicas = 0,
                                               std::uint64_t seed = 0, double horizon = 0.0);

// Level eigenfunction H_{(g_1..g_N)}: the nested sums over interlacing configurations,
// and its determinant form.
double level_eigenfunction_recursive(DriftKind kind, const std::vector<double>& gammas, const Config& x,
                                     const InhomogeneitySequence& a);
double level_eigenfunction_det(DriftKind kind, const std::vector<double>& gammas, const Config& x,
                               const InhomogeneitySequence& a);

inline constexpr std::uint64_t kDriftTag = 0x64;

}  // namespace inhomog
