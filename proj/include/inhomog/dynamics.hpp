#pragma once

#include <functional>
#include <map>
#include <optional>

#include "inhomog/interlacing.hpp"
#include "inhomog/rng.hpp"
#include "inhomog/stats.hpp"

namespace inhomog {

// levels[n-1] holds the n coordinates of level n.
struct ArrayState {
    std::vector<Config> levels;
    double clock = 0.0;

    int depth() const { return int(levels.size()); }
    bool operator==(const ArrayState& o) const { return levels == o.levels; }
};

ArrayState packed_array(int N);
bool valid_array(const ArrayState& s);

struct Step {
    enum class Kind { bernoulli, geometric, purebirth };
    Kind kind;
    double param;
};
using Schedule = std::vector<Step>;

Symbol step_symbol(const Step& s);
// product of the step symbols with indices in [from, to)
Symbol schedule_symbol(const Schedule& s, std::size_t from, std::size_t to);
void validate_schedule(const Schedule& s, const InhomogeneitySequence& a);

// theta(x, level) with levels counted from 0 (level 0 holds one particle).
struct Environment {
    std::function<double(int, int)> theta;
};

enum class EnvKind { pb, B, g };

// Environments reproducing the specialised dynamics.
Environment bernoulli_env(double alpha, const InhomogeneitySequence& a);
Environment geometric_env(double beta, const InhomogeneitySequence& a);
Environment purebirth_env(const InhomogeneitySequence& a);

// Checks inf > 0 and sup < inf (pb) or sup < 1 (B, g) on the sites and levels
// in [0, sites) x [0, levels).
void validate_env(const Environment& env, EnvKind kind, int sites, int levels);

// Descriptive single steps. `step` keys the shared draws; the draw for particle
// i of level n (both from 1) is rng.uniform(kStepTag, step, n, i).
void step_bernoulli(ArrayState& s, double alpha, const InhomogeneitySequence& a, const RngStream& rng,
                    std::uint64_t step);
void step_geometric(ArrayState& s, double beta, const InhomogeneitySequence& a, const RngStream& rng,
                    std::uint64_t step);
void run_purebirth(ArrayState& s, double duration, const InhomogeneitySequence& a, const RngStream& rng,
                   std::uint64_t segment);

// The min/max recursion on the same draws.
void step_recursive(ArrayState& s, Step::Kind kind, double param, const InhomogeneitySequence& a,
                    const RngStream& rng, std::uint64_t step);

void step_env(ArrayState& s, const Environment& env, EnvKind kind, const RngStream& rng, std::uint64_t step);
void run_env_purebirth(ArrayState& s, const Environment& env, double duration, const RngStream& rng,
                       std::uint64_t segment);

void run_step(ArrayState& s, const Step& st, const InhomogeneitySequence& a, const RngStream& rng,
              std::uint64_t key);
// Runs every step of the schedule; step k uses key k.
void run_schedule(ArrayState& s, const Schedule& sched, const InhomogeneitySequence& a, const RngStream& rng);

// Edge recursions replayed alone. `edge[n-1]` is X_1^{(n)} (left) or X_n^{(n)} (right).
void left_edge_step(std::vector<int>& edge, Step::Kind kind, double param, const InhomogeneitySequence& a,
                    const RngStream& rng, std::uint64_t step);
void right_edge_step(std::vector<int>& edge, Step::Kind kind, double param, const InhomogeneitySequence& a,
                     const RngStream& rng, std::uint64_t step);
std::vector<int> left_edge(const ArrayState& s);
std::vector<int> right_edge(const ArrayState& s);

struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Number of leading columns pinned at their packed value on the last stored level;
// by interlacing those columns stay pinned on every deeper level.
int pinned_columns(const ArrayState& s);

// Conjugate column map on the first `levels` levels (0-indexed levels 0..levels-1).
// Needs columns 0..levels-1 pinned within the stored levels.
ArrayState hgt_map(const ArrayState& s, int levels);
// As many levels as the pinned columns allow.
ArrayState hgt_map(const ArrayState& s);

struct DualityReport {
    std::vector<TestResult> per_level;
    long truncation_failures = 0;
    double min_p() const;
};

// Runs (env, kind) on `depth` levels, maps by Hgt to `levels` levels, and compares
// each level's law with the dual dynamics in the transposed environment.
// For pb `horizon` is a time, otherwise a number of steps.
DualityReport duality_test(const Environment& env, EnvKind kind, double horizon, int levels, int depth,
                           long replicas, std::uint64_t seed);

inline constexpr std::uint64_t kStepTag = 0x51;
inline constexpr std::uint64_t kClockTag = 0x52;

}  // namespace inhomog
