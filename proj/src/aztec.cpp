#include "inhomog/aztec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "inhomog/dynamics.hpp"
#include "inhomog/parallel.hpp"

namespace inhomog {

namespace {

int bit(DimerKind k) { return 1 << int(k); }

void check_square(int N, int x, int n) {
    if (x < 0 || x >= N || n < 1 || n > N)
        throw DomainError("square (" + std::to_string(x) + ", " + std::to_string(n) + ") outside the size-" +
                          std::to_string(N) + " diamond");
}

double delta(const AztecWeighting& W, int x, int n) {
    return W.get(DimerKind::w, x, n) * W.get(DimerKind::e, x, n) +
           W.get(DimerKind::n, x, n) * W.get(DimerKind::s, x, n);
}

// Embeds into the next size, deletes pairs landing on one square and slides the rest.
DimerCover slide(const DimerCover& d) {
    const int k = d.N;
    DimerCover out(k + 1);
    std::vector<int> arrivals(std::size_t(k + 1) * (k + 1), 0);
    std::vector<std::uint8_t> arrived(arrivals.size(), 0);
    for (int x = 0; x < k; ++x)
        for (int n = 1; n <= k; ++n)
            for (DimerKind K : kDimerKinds) {
                if (!d.has(K, x, n)) continue;
                // the square of the larger graph that owns this edge; the dimer then
                // slides across that square and keeps its name
                int qx = x, qn = n;
                if (K == DimerKind::e) ++qx, ++qn;
                if (K == DimerKind::n) ++qx;
                if (K == DimerKind::s) ++qn;
                std::size_t q = std::size_t(qx) * (k + 1) + (qn - 1);
                ++arrivals[q];
                arrived[q] |= std::uint8_t(bit(K));
            }
    for (int x = 0; x <= k; ++x)
        for (int n = 1; n <= k + 1; ++n) {
            std::size_t q = std::size_t(x) * (k + 1) + (n - 1);
            if (arrivals[q] == 1) {
                out.mask[q] = arrived[q];
            } else if (arrivals[q] == 2) {
                bool opposite_pair = arrived[q] == (bit(DimerKind::n) | bit(DimerKind::s)) ||
                                     arrived[q] == (bit(DimerKind::w) | bit(DimerKind::e));
                if (!opposite_pair) throw AztecError("shuffle: non-opposite dimers met in one square");
            } else if (arrivals[q] > 2) {
                throw AztecError("shuffle: more than two dimers met in one square");
            }
        }
    return out;
}

// Tiles the uncovered cells by squares: the lowest, then leftmost, uncovered cell
// must be the south-west corner of its square.
std::vector<std::pair<int, int>> holes_of(const DimerCover& s) {
    const int N = s.N, side = 2 * N;
    auto id = [side](Cell c) { return c.j * side + c.i; };
    std::vector<int> state(std::size_t(side) * side, -1);  // -1 outside, 0 free, 1 covered
    std::vector<std::pair<int, int>> square_at(state.size(), {-1, -1});
    for (int x = 0; x < N; ++x)
        for (int n = 1; n <= N; ++n) {
            square_at[id(edge_cells(N, DimerKind::s, x, n).first)] = {x, n};
            for (DimerKind k : kDimerKinds) {
                auto [p, q] = edge_cells(N, k, x, n);
                int v = s.has(k, x, n) ? 1 : 0;
                state[id(p)] = std::max(state[id(p)], v);
                state[id(q)] = std::max(state[id(q)], v);
            }
        }
    std::vector<std::pair<int, int>> h;
    for (int c = 0; c < int(state.size()); ++c) {
        if (state[c] != 0) continue;
        auto sq = square_at[c];
        if (sq.first < 0) throw AztecError("shuffle: uncovered cells do not split into squares");
        auto [p, q] = edge_cells(N, DimerKind::n, sq.first, sq.second);
        auto [r, t] = edge_cells(N, DimerKind::s, sq.first, sq.second);
        for (Cell v : {p, q, r, t}) {
            if (state[id(v)] != 0) throw AztecError("shuffle: uncovered cells do not split into squares");
            state[id(v)] = 1;
        }
        h.push_back(sq);
    }
    return h;
}

void fill(DimerCover& s, int x, int n, bool we) {
    if (we) {
        s.add(DimerKind::w, x, n);
        s.add(DimerKind::e, x, n);
    } else {
        s.add(DimerKind::n, x, n);
        s.add(DimerKind::s, x, n);
    }
}

}  // namespace

char kind_char(DimerKind k) { return "nswe"[int(k)]; }

std::pair<Cell, Cell> edge_cells(int N, DimerKind k, int x, int n) {
    check_square(N, x, n);
    const int i = x + n - 1, j = N + x - n;
    switch (k) {
        case DimerKind::n: return {{i, j + 1}, {i + 1, j + 1}};
        case DimerKind::s: return {{i, j}, {i + 1, j}};
        case DimerKind::w: return {{i, j}, {i, j + 1}};
        default: return {{i + 1, j}, {i + 1, j + 1}};
    }
}

AztecWeighting::AztecWeighting(int N, double value) : N_(N), w_(std::size_t(4) * N * N, value) {
    if (N < 0) throw DomainError("diamond size must be non-negative");
    if (!(value > 0.0) || !std::isfinite(value)) throw DomainError("weights must be positive");
}

std::size_t AztecWeighting::index(DimerKind k, int x, int n) const {
    check_square(N_, x, n);
    return (std::size_t(x) * N_ + (n - 1)) * 4 + std::size_t(k);
}

void AztecWeighting::set(DimerKind k, int x, int n, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("weights must be positive");
    w_[index(k, x, n)] = v;
}

AztecWeighting z_weighting(int N, const std::vector<double>& z1, const std::vector<double>& z2) {
    if (int(z1.size()) < N || int(z2.size()) < N) throw DomainError("z sequences shorter than the diamond");
    AztecWeighting W(N);
    for (int x = 0; x < N; ++x)
        for (int n = 1; n <= N; ++n) {
            W.set(DimerKind::w, x, n, z1[x]);
            W.set(DimerKind::s, x, n, z2[x]);
        }
    return W;
}

AztecWeighting a_weighting(int N, const InhomogeneitySequence& a) {
    std::vector<double> z1(N), z2(N);
    for (int x = 0; x < N; ++x) {
        if (!(a[x] > 0.0 && a[x] < 1.0)) throw DomainError("a_x must lie in (0, 1)");
        z1[x] = a[x];
        z2[x] = 1.0 - a[x];
    }
    return z_weighting(N, z1, z2);
}

double square_prob(const AztecWeighting& W, int x, int n) {
    double we = W.get(DimerKind::w, x, n) * W.get(DimerKind::e, x, n);
    return we / (we + W.get(DimerKind::n, x, n) * W.get(DimerKind::s, x, n));
}

Matrix rho_table(const AztecWeighting& W) {
    const int N = W.size();
    Matrix r(N, N);
    for (int x = 0; x < N; ++x)
        for (int n = 1; n <= N; ++n) r(x, n - 1) = square_prob(W, x, n);
    return r;
}

AztecWeighting gauge_transform(const AztecWeighting& W, Cell v, double c) {
    if (!(c > 0.0)) throw DomainError("gauge factor must be positive");
    AztecWeighting out = W;
    const int N = W.size();
    bool found = false;
    for (int x = 0; x < N; ++x)
        for (int n = 1; n <= N; ++n)
            for (DimerKind k : kDimerKinds) {
                auto [p, q] = edge_cells(N, k, x, n);
                if (p == v || q == v) {
                    out.set(k, x, n, W.get(k, x, n) * c);
                    found = true;
                }
            }
    if (!found) throw DomainError("gauge vertex outside the diamond");
    return out;
}

AztecWeighting urban_renewal(const AztecWeighting& W) {
    const int k = W.size() - 1;
    if (k < 1) throw DomainError("urban renewal needs size at least 2");
    AztecWeighting out(k);
    for (int x = 0; x < k; ++x)
        for (int n = 1; n <= k; ++n) {
            // each neighbouring square is renewed (opposite weights swapped, divided by
            // its delta); the new square collects the side facing it
            out.set(DimerKind::w, x, n, W.get(DimerKind::w, x, n) / delta(W, x, n));
            out.set(DimerKind::e, x, n, W.get(DimerKind::e, x + 1, n + 1) / delta(W, x + 1, n + 1));
            out.set(DimerKind::n, x, n, W.get(DimerKind::n, x + 1, n) / delta(W, x + 1, n));
            out.set(DimerKind::s, x, n, W.get(DimerKind::s, x, n + 1) / delta(W, x, n + 1));
        }
    return out;
}

std::vector<AztecWeighting> ur_tower(const AztecWeighting& W) {
    const int N = W.size();
    std::vector<AztecWeighting> tower(N, AztecWeighting(0));
    if (N == 0) return tower;
    tower[N - 1] = W;
    for (int k = N - 1; k >= 1; --k) tower[k - 1] = urban_renewal(tower[k]);
    return tower;
}

bool DimerCover::has(DimerKind k, int x, int n) const {
    check_square(N, x, n);
    return mask[std::size_t(x) * N + (n - 1)] & bit(k);
}

void DimerCover::add(DimerKind k, int x, int n) {
    check_square(N, x, n);
    mask[std::size_t(x) * N + (n - 1)] |= std::uint8_t(bit(k));
}

std::size_t DimerCover::dimer_count() const {
    std::size_t c = 0;
    for (auto m : mask) c += std::size_t(__builtin_popcount(m));
    return c;
}

bool valid_cover(const DimerCover& d) {
    const int N = d.N;
    if (d.mask.size() != std::size_t(N) * N) return false;
    const int side = 2 * N;
    std::vector<int> hits(std::size_t(side) * side, 0), exists(hits.size(), 0);
    for (int x = 0; x < N; ++x)
        for (int n = 1; n <= N; ++n)
            for (DimerKind k : kDimerKinds) {
                auto [p, q] = edge_cells(N, k, x, n);
                exists[p.i * side + p.j] = exists[q.i * side + q.j] = 1;
                if (d.has(k, x, n)) {
                    ++hits[p.i * side + p.j];
                    ++hits[q.i * side + q.j];
                }
            }
    for (std::size_t c = 0; c < hits.size(); ++c)
        if (exists[c] && hits[c] != 1) return false;
    return true;
}

std::vector<DimerCover> enumerate_covers(int N) {
    if (N < 0 || N > 5) throw DomainError("exhaustive enumeration supports sizes 0..5");
    struct Edge {
        DimerKind k;
        int x, n, a, b;
    };
    const int side = 2 * N;
    std::vector<Edge> edges;
    std::vector<std::vector<int>> incident(std::size_t(side) * side);
    std::vector<int> is_cell(incident.size(), 0);
    for (int x = 0; x < N; ++x)
        for (int n = 1; n <= N; ++n)
            for (DimerKind k : kDimerKinds) {
                auto [p, q] = edge_cells(N, k, x, n);
                int a = p.i * side + p.j, b = q.i * side + q.j;
                incident[a].push_back(int(edges.size()));
                incident[b].push_back(int(edges.size()));
                is_cell[a] = is_cell[b] = 1;
                edges.push_back({k, x, n, a, b});
            }
    std::vector<int> cells;
    for (std::size_t c = 0; c < is_cell.size(); ++c)
        if (is_cell[c]) cells.push_back(int(c));
    std::vector<int> covered(incident.size(), 0);
    std::vector<int> chosen;
    std::vector<DimerCover> out;
    std::function<void(std::size_t)> rec = [&](std::size_t from) {
        while (from < cells.size() && covered[cells[from]]) ++from;
        if (from == cells.size()) {
            DimerCover d(N);
            for (int e : chosen) d.add(edges[e].k, edges[e].x, edges[e].n);
            out.push_back(std::move(d));
            return;
        }
        int c = cells[from];
        for (int e : incident[c]) {
            int other = edges[e].a == c ? edges[e].b : edges[e].a;
            if (covered[other]) continue;
            covered[c] = covered[other] = 1;
            chosen.push_back(e);
            rec(from + 1);
            chosen.pop_back();
            covered[c] = covered[other] = 0;
        }
    };
    rec(0);
    return out;
}

double cover_weight(const AztecWeighting& W, const DimerCover& d) {
    if (W.size() != d.N) throw DomainError("weighting and cover sizes differ");
    double p = 1.0;
    for (int x = 0; x < d.N; ++x)
        for (int n = 1; n <= d.N; ++n)
            for (DimerKind k : kDimerKinds)
                if (d.has(k, x, n)) p *= W.get(k, x, n);
    return p;
}

std::map<DimerCover, double> dimer_measure(const AztecWeighting& W) {
    std::map<DimerCover, double> out;
    double Z = 0.0;
    for (auto& d : enumerate_covers(W.size())) Z += out[d] = cover_weight(W, d);
    for (auto& [d, p] : out) p /= Z;
    return out;
}

std::vector<Config> dimer_to_particles(const DimerCover& d) {
    std::vector<Config> levels(d.N);
    for (int n = 1; n <= d.N; ++n) {
        for (int x = 0; x < d.N; ++x)
            if (d.has(DimerKind::s, x, n) || d.has(DimerKind::e, x, n)) levels[n - 1].push_back(x);
        if (int(levels[n - 1].size()) != n)
            throw AztecError("cover has " + std::to_string(levels[n - 1].size()) + " particles on level " +
                             std::to_string(n));
    }
    return levels;
}

std::vector<std::pair<int, int>> shuffle_holes(const DimerCover& d) { return holes_of(slide(d)); }

DimerCover shuffle_step(const DimerCover& d, const std::function<bool(int, int)>& fill_we) {
    DimerCover s = slide(d);
    for (auto [x, n] : holes_of(s)) fill(s, x, n, fill_we(x, n));
    if (!valid_cover(s)) throw AztecError("shuffle produced an invalid cover");
    return s;
}

DimerCover shuffle_sample(const AztecWeighting& W, const RngStream& rng, std::vector<DimerCover>* trajectory) {
    auto tower = ur_tower(W);
    DimerCover d(0);
    if (trajectory) trajectory->clear();
    for (int k = 0; k < W.size(); ++k) {
        Matrix rho = rho_table(tower[k]);
        d = shuffle_step(d, [&](int x, int n) { return rng.uniform(kShuffleTag, k + 1, x, n) < rho(x, n - 1); });
        if (trajectory) trajectory->push_back(d);
    }
    return d;
}

std::map<DimerCover, double> shuffle_law(const AztecWeighting& W) {
    if (W.size() > 4) throw DomainError("exact shuffle law supports sizes up to 4");
    auto tower = ur_tower(W);
    std::map<DimerCover, double> dist{{DimerCover(0), 1.0}};
    for (int k = 0; k < W.size(); ++k) {
        Matrix rho = rho_table(tower[k]);
        std::map<DimerCover, double> next;
        for (auto& [d, p] : dist) {
            DimerCover s = slide(d);
            auto holes = holes_of(s);
            for (std::uint32_t c = 0; c < (1u << holes.size()); ++c) {
                DimerCover t = s;
                double q = p;
                for (std::size_t h = 0; h < holes.size(); ++h) {
                    auto [x, n] = holes[h];
                    bool we = c >> h & 1u;
                    q *= we ? rho(x, n - 1) : 1.0 - rho(x, n - 1);
                    fill(t, x, n, we);
                }
                next[t] += q;
            }
        }
        dist.swap(next);
    }
    return dist;
}

double ConsistencyReport::max_deviation() const {
    double m = 0.0;
    for (double d : deviation) m = std::max(m, d);
    return m;
}

ConsistencyReport consistency_check(const std::function<AztecWeighting(int)>& family, int k_max) {
    ConsistencyReport r;
    for (int k = 1; k <= k_max; ++k) {
        AztecWeighting big = family(k + 1), small = family(k);
        if (big.size() != k + 1 || small.size() != k) throw DomainError("family returned the wrong size");
        r.deviation.push_back((rho_table(urban_renewal(big)) - rho_table(small)).cwiseAbs().maxCoeff());
    }
    return r;
}

double ShuffleVsPush::min_p() const {
    double m = 1.0;
    for (auto& t : per_t) m = std::min(m, t.p_value);
    return m;
}

ShuffleVsPush shuffle_vs_pushblock(const InhomogeneitySequence& a, int N, int t_max, long replicas,
                                   std::uint64_t seed) {
    if (N < 1 || t_max < 0) throw DomainError("need N >= 1 and t_max >= 0");
    if (!(a.inf() > 0.0 && a.sup() < 1.0)) throw DomainError("shuffle coupling needs 0 < a < 1");
    const int M = N + t_max;
    const AztecWeighting W = a_weighting(M, a);
    const Step jump{Step::Kind::bernoulli, 1.0};
    using Counts = std::vector<std::map<Config, long>>;
    auto parts = parallel_chunks<std::pair<Counts, Counts>>(replicas, [&](long lo, long hi) {
        Counts sh(t_max + 1), pb(t_max + 1);
        std::vector<DimerCover> traj;
        for (long r = lo; r < hi; ++r) {
            shuffle_sample(W, RngStream{seed, std::uint64_t(r)}, &traj);
            for (int t = 0; t <= t_max; ++t) ++sh[t][dimer_to_particles(traj[N + t - 1])[N - 1]];
            // independent draws for the second sample
            RngStream rng{seed, (std::uint64_t(1) << 40) + std::uint64_t(r)};
            ArrayState s = packed_array(N);
            ++pb[0][s.levels[N - 1]];
            for (int t = 1; t <= t_max; ++t) {
                run_step(s, jump, a, rng, std::uint64_t(t - 1));
                ++pb[t][s.levels[N - 1]];
            }
        }
        return std::make_pair(sh, pb);
    });
    ShuffleVsPush out;
    out.shuffle_counts.assign(t_max + 1, {});
    out.push_counts.assign(t_max + 1, {});
    for (auto& [sh, pb] : parts)
        for (int t = 0; t <= t_max; ++t) {
            for (auto& [c, v] : sh[t]) out.shuffle_counts[t][c] += v;
            for (auto& [c, v] : pb[t]) out.push_counts[t][c] += v;
        }
    for (int t = 1; t <= t_max; ++t)
        out.per_t.push_back(chi_square_two_sample(out.shuffle_counts[t], out.push_counts[t]));
    return out;
}

std::string tiling_svg(const DimerCover& d, double cell) {
    const int side = 2 * d.N;
    const char* colour[4] = {"#d9534f", "#5cb85c", "#428bca", "#f0ad4e"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << side * cell << "\" height=\"" << side * cell
       << "\" viewBox=\"0 0 " << side * cell << ' ' << side * cell << "\">\n";
    for (int x = 0; x < d.N; ++x)
        for (int n = 1; n <= d.N; ++n)
            for (DimerKind k : kDimerKinds) {
                if (!d.has(k, x, n)) continue;
                auto [p, q] = edge_cells(d.N, k, x, n);
                int i0 = std::min(p.i, q.i), i1 = std::max(p.i, q.i);
                int j0 = std::min(p.j, q.j), j1 = std::max(p.j, q.j);
                os << "  <rect x=\"" << i0 * cell << "\" y=\"" << (side - 1 - j1) * cell << "\" width=\""
                   << (i1 - i0 + 1) * cell << "\" height=\"" << (j1 - j0 + 1) * cell << "\" fill=\""
                   << colour[int(k)] << "\" stroke=\"black\" stroke-width=\"1\"><title>" << kind_char(k) << " ("
                   << x << "," << n << ")</title></rect>\n";
            }
    os << "</svg>\n";
    return os.str();
}

}  // namespace inhomog
