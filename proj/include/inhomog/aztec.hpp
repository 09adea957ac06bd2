#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "inhomog/interlacing.hpp"
#include "inhomog/rng.hpp"
#include "inhomog/stats.hpp"

namespace inhomog {

// Squares (x, n), 0 <= x < N, 1 <= n <= N, tile the edge set of the Aztec diamond
// graph: each square owns its four edges. Vertices are the cells (i, j) of the
// diamond in [0, 2N)^2; square (x, n) sits at the corner (x + n - 1, N + x - n),
// so x grows to the north-east and n to the south-east.
enum class DimerKind : std::uint8_t { n = 0, s = 1, w = 2, e = 3 };
inline constexpr DimerKind kDimerKinds[4] = {DimerKind::n, DimerKind::s, DimerKind::w, DimerKind::e};
char kind_char(DimerKind k);

struct Cell {
    int i, j;
    bool operator==(const Cell&) const = default;
};
std::pair<Cell, Cell> edge_cells(int N, DimerKind k, int x, int n);

struct AztecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class AztecWeighting {
public:
    explicit AztecWeighting(int N, double value = 1.0);
    int size() const { return N_; }
    double get(DimerKind k, int x, int n) const { return w_[index(k, x, n)]; }
    void set(DimerKind k, int x, int n, double v);

private:
    std::size_t index(DimerKind k, int x, int n) const;
    int N_;
    std::vector<double> w_;
};

// w = z1_x, s = z2_x, e = n = 1.
AztecWeighting z_weighting(int N, const std::vector<double>& z1, const std::vector<double>& z2);
// The case z1 = a, z2 = 1 - a, whose square probabilities are a_x.
AztecWeighting a_weighting(int N, const InhomogeneitySequence& a);

double square_prob(const AztecWeighting& W, int x, int n);
// rho(x, n) stored at (x, n - 1)
Matrix rho_table(const AztecWeighting& W);

// Multiplies the weights of every edge at cell v by c.
AztecWeighting gauge_transform(const AztecWeighting& W, Cell v, double c);

// Size k+1 -> size k. Square (x, n) of the smaller graph is the face surrounded by
// squares (x, n) (west), (x+1, n) (north), (x, n+1) (south), (x+1, n+1) (east).
AztecWeighting urban_renewal(const AztecWeighting& W);
// tower[k-1] = UR^N_k(W) for k = 1..N
std::vector<AztecWeighting> ur_tower(const AztecWeighting& W);

struct DimerCover {
    int N = 0;
    std::vector<std::uint8_t> mask;  // per square x * N + (n - 1), bit per DimerKind

    explicit DimerCover(int size = 0) : N(size), mask(std::size_t(size) * size, 0) {}
    bool has(DimerKind k, int x, int n) const;
    void add(DimerKind k, int x, int n);
    std::size_t dimer_count() const;
    bool operator==(const DimerCover& o) const { return N == o.N && mask == o.mask; }
    bool operator<(const DimerCover& o) const { return N != o.N ? N < o.N : mask < o.mask; }
};

bool valid_cover(const DimerCover& d);
std::vector<DimerCover> enumerate_covers(int N);
double cover_weight(const AztecWeighting& W, const DimerCover& d);
std::map<DimerCover, double> dimer_measure(const AztecWeighting& W);

// Level n holds the sorted x of squares carrying a south or east dimer.
std::vector<Config> dimer_to_particles(const DimerCover& d);

// One shuffle step from size k to k + 1: embed, delete pairs sharing a square, slide,
// then fill each empty square with a west-east pair when fill_we(x, n) is true.
DimerCover shuffle_step(const DimerCover& d, const std::function<bool(int x, int n)>& fill_we);
// Empty squares left after the deterministic part of shuffle_step.
std::vector<std::pair<int, int>> shuffle_holes(const DimerCover& d);

// Samples P_W. `trajectory`, if given, receives the covers after steps 1..N.
DimerCover shuffle_sample(const AztecWeighting& W, const RngStream& rng,
                          std::vector<DimerCover>* trajectory = nullptr);
// Exact law of the shuffle output by enumerating every fill (small N only).
std::map<DimerCover, double> shuffle_law(const AztecWeighting& W);

struct ConsistencyReport {
    std::vector<double> deviation;  // index k - 1
    double max_deviation() const;
};
// Compares rho of UR(W^{(k+1)}) with rho of W^{(k)} for k = 1..k_max.
ConsistencyReport consistency_check(const std::function<AztecWeighting(int)>& family, int k_max);

struct ShuffleVsPush {
    std::vector<TestResult> per_t;  // index t - 1, t = 1..t_max
    std::vector<std::map<Config, long>> shuffle_counts, push_counts;  // index t, t = 0..t_max
    double min_p() const;
};
// Level-N particles of the shuffle with weighting a_weighting at step t + N against the
// Bernoulli push-block dynamics (jump probability a_x) after t steps.
ShuffleVsPush shuffle_vs_pushblock(const InhomogeneitySequence& a, int N, int t_max, long replicas,
                                   std::uint64_t seed);

std::string tiling_svg(const DimerCover& d, double cell = 20.0);

inline constexpr std::uint64_t kShuffleTag = 0x61;

}  // namespace inhomog
