#include <array>
#include <chrono>
#include <map>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "inhomog/aztec.hpp"
#include "inhomog/correlations.hpp"
#include "inhomog/dynamics.hpp"
#include "inhomog/ensembles.hpp"
#include "inhomog/parallel.hpp"
#include "inhomog/suites.hpp"

using namespace inhomog;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

// Validation failures carry the offending key and map to exit status 2.
struct ConfigError : std::runtime_error {
    std::string key;
    ConfigError(std::string k, const std::string& what) : std::runtime_error(what), key(std::move(k)) {}
};

void allow_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where, "expected an object");
    for (auto& [k, v] : obj.items())
        if (!allowed.count(k)) throw ConfigError(where.empty() ? k : where + "." + k, "unknown key");
}

template <class T>
T get(const json& obj, const std::string& key, const std::string& where, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where.empty() ? key : where + "." + key, "wrong type");
    }
}

json read_json(const std::string& path, const std::string& key) {
    std::ifstream in(path);
    if (!in) throw ConfigError(key, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(key, std::string("malformed JSON: ") + e.what());
    }
}

InhomogeneitySequence parse_inhomogeneity(const json& j, const std::string& where) {
    allow_keys(j, where, {"values", "periodic", "constant", "length", "inf", "sup"});
    const std::size_t length = get<std::size_t>(j, "length", where, 400);
    InhomogeneitySequence a = InhomogeneitySequence::constant(1.0, 1);
    try {
        if (j.contains("periodic")) {
            a = InhomogeneitySequence::periodic(get<std::vector<double>>(j, "periodic", where, {}), length);
        } else if (j.contains("constant")) {
            a = InhomogeneitySequence::constant(get<double>(j, "constant", where, 1.0), length);
        } else if (j.contains("values")) {
            auto v = get<std::vector<double>>(j, "values", where, {});
            if (v.empty()) throw ConfigError(where + ".values", "empty");
            double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
            a = InhomogeneitySequence(v, get<double>(j, "inf", where, lo), get<double>(j, "sup", where, hi));
        } else {
            throw ConfigError(where, "needs one of values, periodic, constant");
        }
    } catch (const DomainError& e) {
        throw ConfigError(where, e.what());
    }
    if (a.inf() <= 0.0) throw ConfigError(where, "inhomogeneity must be positive");
    return a;
}

Step::Kind parse_kind(const std::string& s, const std::string& key) {
    if (s == "bernoulli") return Step::Kind::bernoulli;
    if (s == "geometric") return Step::Kind::geometric;
    if (s == "purebirth") return Step::Kind::purebirth;
    throw ConfigError(key, "unknown step kind '" + s + "'");
}

Schedule parse_schedule(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where, "expected an array");
    Schedule s;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string w = where + "[" + std::to_string(i) + "]";
        allow_keys(j[i], w, {"kind", "param"});
        s.push_back({parse_kind(get<std::string>(j[i], "kind", w, ""), w + ".kind"), get<double>(j[i], "param", w, 0.0)});
    }
    return s;
}

Symbol parse_symbol(const json& j, const std::string& where) {
    allow_keys(j, where, {"alphas", "betas", "t"});
    return Symbol{get<std::vector<double>>(j, "alphas", where, {}), get<std::vector<double>>(j, "betas", where, {}),
                  get<double>(j, "t", where, 0.0)};
}

EnsembleSpec parse_ensemble(const json& j, const std::string& where) {
    allow_keys(j, where, {"N", "M", "steps", "inhomogeneity"});
    EnsembleSpec s;
    s.N = get<int>(j, "N", where, 1);
    s.M = get<int>(j, "M", where, 0);
    if (!j.contains("steps") || !j["steps"].is_array()) throw ConfigError(where + ".steps", "expected an array");
    for (std::size_t i = 0; i < j["steps"].size(); ++i)
        s.steps.push_back(parse_symbol(j["steps"][i], where + ".steps[" + std::to_string(i) + "]"));
    s.a = j.contains("inhomogeneity") ? parse_inhomogeneity(j["inhomogeneity"], where + ".inhomogeneity")
                                      : InhomogeneitySequence::constant(1.0, std::size_t(s.p * (s.M + s.N)) + 8);
    try {
        s.validate();
    } catch (const DomainError& e) {
        throw ConfigError(where, e.what());
    }
    return s;
}

AztecWeighting parse_weights(const json& j, int N, const std::string& where) {
    allow_keys(j, where, {"n", "s", "w", "e", "inhomogeneity"});
    if (j.contains("inhomogeneity")) {
        auto a = parse_inhomogeneity(j["inhomogeneity"], where + ".inhomogeneity");
        return a_weighting(N, a);
    }
    AztecWeighting W(N);
    for (DimerKind k : kDimerKinds) {
        const std::string key(1, kind_char(k));
        if (!j.contains(key)) continue;
        auto rows = get<std::vector<std::vector<double>>>(j, key, where, {});
        if (int(rows.size()) != N) throw ConfigError(where + "." + key, "needs one row per x");
        for (int x = 0; x < N; ++x) {
            if (int(rows[x].size()) != N) throw ConfigError(where + "." + key, "needs one entry per n");
            for (int n = 1; n <= N; ++n) {
                try {
                    W.set(k, x, n, rows[x][n - 1]);
                } catch (const DomainError& e) {
                    throw ConfigError(where + "." + key, e.what());
                }
            }
        }
    }
    return W;
}

struct Output {
    fs::path dir;
    std::vector<std::pair<std::string, std::string>> files;  // name, content

    void add(const std::string& name, std::string content) { files.emplace_back(name, std::move(content)); }
    void write() const {
        fs::create_directories(dir);
        for (auto& [name, content] : files) {
            std::ofstream out(dir / name, std::ios::binary);
            out << content;
        }
    }
};

int finish(const std::string& experiment, const std::vector<ResultRecord>& records, const json& echo, Output& out,
           double seconds) {
    const std::string failing = first_failure(records);
    json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["experiment"] = experiment;
    summary["config"] = echo;
    summary["records"] = records.size();
    long failures = 0;
    for (auto& r : records) failures += r.pass && !*r.pass;
    summary["failures"] = failures;
    summary["first_failure"] = failing.empty() ? json(nullptr) : json(failing);
    summary["pass"] = failing.empty();
    summary["wall_seconds"] = seconds;
    out.add("results.csv", records_csv(records));
    out.add("records.jsonl", records_jsonl(records));
    out.add("summary.json", summary.dump(2) + "\n");
    out.write();
    if (!failing.empty()) {
        std::cerr << "tolerance failure: " << failing << "\n";
        return 1;
    }
    return 0;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string config_string(const Config& c) {
    std::string s;
    for (std::size_t i = 0; i < c.size(); ++i) s += (i ? " " : "") + std::to_string(c[i]);
    return s;
}

// Settings shared by every subcommand; flags override the config file.
struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<long> replicas;
    std::string out = "out";
    std::optional<int> threads;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "JSON experiment file");
    app->add_option("--seed", c.seed, "seed");
    app->add_option("--replicas", c.replicas, "Monte Carlo replicas");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--threads", c.threads, "worker threads");
}

const std::set<std::string> kTopKeys{"schema_version", "experiment", "inhomogeneity", "schedule", "N",
                                     "points",         "replicas",   "seed",          "suite",    "size",
                                     "uniform",        "weights",    "samples",       "ensemble", "bessel",
                                     "tolerances",     "output"};

json load_config(const Common& c, const std::string& experiment) {
    json j = c.config.empty() ? json::object() : read_json(c.config, "--config");
    allow_keys(j, "", kTopKeys);
    const int version = get<int>(j, "schema_version", "", kSchemaVersion);
    if (version != kSchemaVersion) throw ConfigError("schema_version", "unsupported version");
    const std::string kind = get<std::string>(j, "experiment", "", experiment);
    if (kind != experiment) throw ConfigError("experiment", "config is for '" + kind + "', not '" + experiment + "'");
    if (j.contains("tolerances")) allow_keys(j["tolerances"], "tolerances", {"p_value", "z"});
    if (j.contains("output")) allow_keys(j["output"], "output", {"dir", "svg"});
    j["schema_version"] = kSchemaVersion;
    j["experiment"] = experiment;
    if (c.seed) j["seed"] = *c.seed;
    if (c.replicas) j["replicas"] = *c.replicas;
    if (!j.contains("seed")) j["seed"] = 7;
    return j;
}

double p_tolerance(const json& j) {
    return j.contains("tolerances") ? get<double>(j["tolerances"], "p_value", "tolerances", 0.001) : 0.001;
}

fs::path out_dir(const Common& c, const json& j) {
    if (j.contains("output") && j["output"].contains("dir") && c.out == "out")
        return get<std::string>(j["output"], "dir", "output", "out");
    return c.out;
}

using Seconds = std::chrono::duration<double>;

int cmd_verify(const Common& c, const std::string& suite_flag, double scale) {
    json j = load_config(c, "verify");
    const std::string suite = suite_flag.empty() ? get<std::string>(j, "suite", "", "all") : suite_flag;
    if (!is_suite(suite)) throw ConfigError("suite", "unknown suite '" + suite + "'");
    j["suite"] = suite;
    SuiteOptions opt;
    opt.seed = j["seed"].get<std::uint64_t>();
    opt.replica_scale = scale;
    auto t0 = std::chrono::steady_clock::now();
    auto records = run_suite(suite, opt);
    Output out{out_dir(c, j), {}};
    return finish("verify", records, j, out, Seconds(std::chrono::steady_clock::now() - t0).count());
}

int cmd_simulate(const Common& c) {
    json j = load_config(c, "simulate");
    const auto a = parse_inhomogeneity(j.value("inhomogeneity", json{{"constant", 1.0}}), "inhomogeneity");
    if (!j.contains("schedule")) throw ConfigError("schedule", "required");
    const Schedule sched = parse_schedule(j["schedule"], "schedule");
    try {
        validate_schedule(sched, a);
    } catch (const DomainError& e) {
        throw ConfigError("schedule", e.what());
    }
    const int N = get<int>(j, "N", "", 2);
    if (N < 1 || N > 6) throw ConfigError("N", "needs 1 <= N <= 6");
    const long replicas = get<long>(j, "replicas", "", 100000);
    if (replicas < 1) throw ConfigError("replicas", "must be positive");
    const std::uint64_t seed = j["seed"].get<std::uint64_t>();
    const double tol = p_tolerance(j);

    auto t0 = std::chrono::steady_clock::now();
    const Symbol f = schedule_symbol(sched, 0, sched.size());
    const std::size_t L = std::size_t(N) + tail_length(f, a, 1e-13);
    if (L + 1 > a.size()) throw ConfigError("inhomogeneity.length", "prefix too short for the schedule");
    std::map<Config, double> exact;
    for (auto& [y, p] : markov_row(t_matrix(f, L, a), packed(N), a)) exact[y] = p;
    auto parts = parallel_chunks<std::map<Config, long>>(replicas, [&](long lo, long hi) {
        std::map<Config, long> m;
        for (long r = lo; r < hi; ++r) {
            ArrayState s = packed_array(N);
            run_schedule(s, sched, a, RngStream{seed, std::uint64_t(r)});
            ++m[s.levels[N - 1]];
        }
        return m;
    });
    std::map<Config, long> counts;
    for (auto& p : parts)
        for (auto& [k, v] : p) counts[k] += v;

    std::vector<ResultRecord> records;
    ResultRecord r;
    r.experiment = "simulate";
    r.metric = "level_law.p_value";
    r.value = chi_square_gof(counts, exact).p_value;
    r.tolerance = tol;
    r.pass = r.value > tol;
    records.push_back(r);

    std::string law = "configuration,count,exact\n";
    std::set<Config> keys;
    for (auto& [k, v] : counts) keys.insert(k);
    for (auto& [k, v] : exact) keys.insert(k);
    for (const Config& k : keys)
        law += config_string(k) + "," + std::to_string(counts.count(k) ? counts[k] : 0) + "," +
               fmt(exact.count(k) ? exact[k] : 0.0) + "\n";
    Output out{out_dir(c, j), {}};
    out.add("law.csv", law);
    return finish("simulate", records, j, out, Seconds(std::chrono::steady_clock::now() - t0).count());
}

int cmd_kernel(const Common& c) {
    json j = load_config(c, "kernel");
    const auto a = parse_inhomogeneity(j.value("inhomogeneity", json{{"constant", 1.0}}), "inhomogeneity");
    const Schedule sched = j.contains("schedule") ? parse_schedule(j["schedule"], "schedule") : Schedule{};
    try {
        validate_schedule(sched, a);
    } catch (const DomainError& e) {
        throw ConfigError("schedule", e.what());
    }
    const int N = get<int>(j, "N", "", 2);
    if (N < 1) throw ConfigError("N", "must be positive");
    auto raw = get<std::vector<std::vector<int>>>(j, "points", "", {});
    if (raw.empty()) throw ConfigError("points", "required: [[t, x], ...]");
    std::vector<TimePoint> pts;
    for (auto& p : raw) {
        if (p.size() != 2 || p[0] < 0 || p[0] > int(sched.size()) || p[1] < 0)
            throw ConfigError("points", "each point is [t, x] with 0 <= t <= schedule length, x >= 0");
        pts.push_back({p[0], p[1]});
    }
    auto t0 = std::chrono::steady_clock::now();
    Matrix K = kernel_level_matrix(N, sched, pts, a);
    std::string csv = "t1,x1,t2,x2,kernel\n";
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t k = 0; k < pts.size(); ++k)
            csv += std::to_string(pts[i].t) + "," + std::to_string(pts[i].x) + "," + std::to_string(pts[k].t) + "," +
                   std::to_string(pts[k].x) + "," + fmt(K(i, k)) + "\n";
    ResultRecord r;
    r.experiment = "kernel";
    r.metric = "correlation";
    r.value = correlation_det(K);
    Output out{out_dir(c, j), {}};
    out.add("kernel.csv", csv);
    return finish("kernel", {r}, j, out, Seconds(std::chrono::steady_clock::now() - t0).count());
}

int cmd_aztec_sample(const Common& c, std::optional<int> size_flag, bool uniform_flag, const std::string& weights_file,
                     std::optional<long> samples_flag, const std::string& svg_flag) {
    json j = load_config(c, "aztec");
    if (size_flag) j["size"] = *size_flag;
    if (samples_flag) j["samples"] = *samples_flag;
    if (uniform_flag) j["uniform"] = true;
    const int N = get<int>(j, "size", "", 2);
    if (N < 1 || N > 200) throw ConfigError("size", "needs 1 <= size <= 200");
    const long samples = get<long>(j, "samples", "", 1);
    if (samples < 1) throw ConfigError("samples", "must be positive");
    AztecWeighting W(N);
    if (!weights_file.empty()) {
        if (uniform_flag) throw ConfigError("--weights", "conflicts with --uniform");
        W = parse_weights(read_json(weights_file, "--weights"), N, "weights");
        j["weights"] = read_json(weights_file, "--weights");
    } else if (j.contains("weights") && !get<bool>(j, "uniform", "", false)) {
        W = parse_weights(j["weights"], N, "weights");
    }
    const std::uint64_t seed = j["seed"].get<std::uint64_t>();
    const double tol = p_tolerance(j);
    std::string svg_name = "tiling.svg";
    if (j.contains("output") && j["output"].contains("svg")) svg_name = get<std::string>(j["output"], "svg", "output", svg_name);
    if (!svg_flag.empty()) svg_name = svg_flag;

    auto t0 = std::chrono::steady_clock::now();
    auto parts = parallel_chunks<std::map<DimerCover, long>>(samples, [&](long lo, long hi) {
        std::map<DimerCover, long> m;
        for (long r = lo; r < hi; ++r) ++m[shuffle_sample(W, RngStream{seed, std::uint64_t(r)})];
        return m;
    });
    std::map<DimerCover, long> counts;
    for (auto& p : parts)
        for (auto& [k, v] : p) counts[k] += v;
    long invalid = 0;
    for (auto& [d, n] : counts) invalid += valid_cover(d) ? 0 : n;

    std::vector<ResultRecord> records;
    ResultRecord r;
    r.experiment = "aztec";
    r.metric = "invalid_covers";
    r.value = double(invalid);
    r.tolerance = 0.0;
    r.pass = invalid == 0;
    records.push_back(r);
    Output out{out_dir(c, j), {}};
    if (N <= 3) {
        auto exact = dimer_measure(W);
        ResultRecord q;
        q.experiment = "aztec";
        q.metric = "chi_square.p_value";
        q.value = chi_square_gof(counts, exact).p_value;
        if (samples >= 1000) {
            q.tolerance = tol;
            q.pass = q.value > tol;
        }
        records.push_back(q);
        std::string csv = "cover,count,exact\n";
        for (auto& [d, p] : exact) {
            std::string key;
            for (auto m : d.mask) key += std::to_string(int(m)) + " ";
            key.pop_back();
            csv += key + "," + std::to_string(counts.count(d) ? counts[d] : 0) + "," + fmt(p) + "\n";
        }
        out.add("covers.csv", csv);
    }
    const DimerCover first = shuffle_sample(W, RngStream{seed, 0});
    std::string particles = "level,positions\n";
    auto levels = dimer_to_particles(first);
    for (std::size_t n = 0; n < levels.size(); ++n) particles += std::to_string(n + 1) + "," + config_string(levels[n]) + "\n";
    out.add("particles.csv", particles);
    const std::string svg = tiling_svg(first);
    fs::path svg_path(svg_name);
    if (svg_path.has_parent_path()) {
        // an explicit path is written as given, outside the output directory
        Output extra{svg_path.parent_path(), {{svg_path.filename().string(), svg}}};
        extra.write();
    } else {
        out.add(svg_name, svg);
    }
    return finish("aztec", records, j, out, Seconds(std::chrono::steady_clock::now() - t0).count());
}

std::vector<std::array<int, 4>> read_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--points", "cannot open " + path);
    std::vector<std::array<int, 4>> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
        std::istringstream ss(line);
        std::array<int, 4> p{};
        if (!(ss >> p[0] >> p[1] >> p[2] >> p[3])) throw ConfigError("--points", "line " + std::to_string(lineno) + ": need r x r' y");
        std::string rest;
        if (ss >> rest) throw ConfigError("--points", "line " + std::to_string(lineno) + ": trailing text");
        pts.push_back(p);
    }
    if (pts.empty()) throw ConfigError("--points", "no points");
    return pts;
}

int cmd_ensemble_kernel(const Common& c, const std::string& spec_file, const std::string& points_file, bool limit) {
    json j = load_config(c, "ensemble");
    if (spec_file.empty() && !j.contains("ensemble")) throw ConfigError("--spec", "required");
    if (!spec_file.empty()) j["ensemble"] = read_json(spec_file, "--spec");
    const EnsembleSpec spec = parse_ensemble(j["ensemble"], "ensemble");
    std::vector<std::array<int, 4>> pts;
    if (!points_file.empty()) {
        pts = read_points(points_file);
    } else {
        for (auto& p : get<std::vector<std::vector<int>>>(j, "points", "", {})) {
            if (p.size() != 4) throw ConfigError("points", "each point is [r, x, r', y]");
            pts.push_back({p[0], p[1], p[2], p[3]});
        }
        if (pts.empty()) throw ConfigError("points", "required: --points file or a points list");
    }
    for (auto& p : pts)
        if (p[0] < 1 || p[0] >= spec.L() || p[2] < 1 || p[2] >= spec.L() || p[1] < 0 || p[1] >= spec.extent() ||
            p[3] < 0 || p[3] >= spec.extent())
            throw ConfigError("--points", "times must lie in [1, L-1] and sites in [0, p(M+N))");
    std::optional<LimitKernel> lim;
    if (limit) {
        try {
            lim.emplace(spec);
        } catch (const DomainError& e) {
            throw ConfigError("ensemble", e.what());
        }
    }

    auto t0 = std::chrono::steady_clock::now();
    FixedEndpointKernel K(spec);
    std::string csv = limit ? "r1,x1,r2,x2,kernel,kernel_limit\n" : "r1,x1,r2,x2,kernel\n";
    for (auto& p : pts) {
        csv += std::to_string(p[0]) + "," + std::to_string(p[1]) + "," + std::to_string(p[2]) + "," +
               std::to_string(p[3]) + "," + fmt(K({p[0], p[1]}, {p[2], p[3]}));
        if (lim) csv += "," + fmt((*lim)({p[0], p[1]}, {p[2], p[3]}));
        csv += "\n";
    }
    std::vector<ResultRecord> records;
    for (int r = 1; r < spec.L(); ++r) {
        double trace = 0.0;
        for (int x = 0; x < spec.extent(); ++x) trace += K({r, x}, {r, x});
        ResultRecord q;
        q.experiment = "ensemble";
        q.metric = "slice" + std::to_string(r) + ".particle_count";
        q.value = trace;
        q.tolerance = double(spec.p * spec.N);
        q.pass = std::abs(trace - spec.p * spec.N) < 1e-8;
        records.push_back(q);
    }
    // an .csv target names the kernel file itself; anything else is a directory
    Common cc = c;
    fs::path target(c.out);
    std::string kernel_name = "kernel.csv";
    if (target.extension() == ".csv") {
        kernel_name = target.filename().string();
        cc.out = target.has_parent_path() ? target.parent_path().string() : ".";
    }
    Output out{out_dir(cc, j), {}};
    out.add(kernel_name, csv);
    return finish("ensemble", records, j, out, Seconds(std::chrono::steady_clock::now() - t0).count());
}

int cmd_bessel(const Common& c) {
    json j = load_config(c, "bessel");
    const auto a = parse_inhomogeneity(
        j.value("inhomogeneity", json{{"periodic", {0.8, 1.25, 1.0}}, {"length", 2000}}), "inhomogeneity");
    json b = j.value("bessel", json::object());
    allow_keys(b, "bessel", {"zeta", "N", "m"});
    const double zeta = get<double>(b, "zeta", "bessel", 1.0);
    const auto Ns = get<std::vector<int>>(b, "N", "bessel", {200, 400});
    const int m = get<int>(b, "m", "bessel", 6);
    if (Ns.empty() || m < 0 || zeta < 0) throw ConfigError("bessel", "needs zeta >= 0, m >= 0 and a list N");
    for (int N : Ns)
        if (std::size_t(N + m + 1) > a.size()) throw ConfigError("inhomogeneity.length", "prefix too short for N");
    auto t0 = std::chrono::steady_clock::now();
    std::vector<BesselDeviation> dev;
    try {
        dev = bessel_limit_check(a, zeta, Ns, m);
    } catch (const DomainError& e) {
        throw ConfigError("bessel", e.what());
    }
    std::vector<ResultRecord> records;
    for (std::size_t i = 0; i < dev.size(); ++i) {
        ResultRecord r;
        r.experiment = "bessel";
        r.metric = "deviation.N" + std::to_string(dev[i].N);
        r.value = dev[i].value();
        if (i > 0) {
            r.tolerance = dev[i - 1].value();
            r.pass = r.value < dev[i - 1].value();
        }
        records.push_back(r);
    }
    Output out{out_dir(c, j), {}};
    return finish("bessel", records, j, out, Seconds(std::chrono::steady_clock::now() - t0).count());
}

// Dispatches on the config's experiment field.
int cmd_run(const Common& c) {
    if (c.config.empty()) throw ConfigError("--config", "required");
    const json j = read_json(c.config, "--config");
    if (!j.is_object() || !j.contains("experiment")) throw ConfigError("experiment", "required");
    const std::string kind = get<std::string>(j, "experiment", "", "");
    if (kind == "verify") return cmd_verify(c, "", 1.0);
    if (kind == "simulate") return cmd_simulate(c);
    if (kind == "kernel") return cmd_kernel(c);
    if (kind == "aztec") return cmd_aztec_sample(c, {}, false, "", {}, "");
    if (kind == "ensemble") return cmd_ensemble_kernel(c, "", "", false);
    if (kind == "bessel") return cmd_bessel(c);
    throw ConfigError("experiment", "unknown experiment '" + kind + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inhomogeneous-space particle systems: sampling and numerical checks"};
    app.require_subcommand(1);

    Common run_c, verify_c, simulate_c, kernel_c, aztec_c, ensemble_c, bessel_c;
    std::string suite;
    double scale = 1.0;
    auto* run = app.add_subcommand("run", "run the experiment named in a config file");
    add_common(run, run_c);
    auto* verify = app.add_subcommand("verify", "run a verification suite");
    add_common(verify, verify_c);
    verify->add_option("--suite", suite, "toeplitz, interlacing, dynamics, correlations, edges, aztec, conditioned, ensembles, bessel or all");
    verify->add_option("--replica-scale", scale, "multiplies every replica count")->check(CLI::PositiveNumber);

    auto* simulate = app.add_subcommand("simulate", "level law after a schedule, against the exact law");
    add_common(simulate, simulate_c);
    auto* kernel = app.add_subcommand("kernel", "space-time kernel of a level");
    add_common(kernel, kernel_c);

    auto* aztec = app.add_subcommand("aztec", "Aztec diamond shuffling");
    aztec->require_subcommand(1);
    auto* sample = aztec->add_subcommand("sample", "sample dimer covers");
    add_common(sample, aztec_c);
    std::optional<int> size;
    std::optional<long> samples;
    bool uniform = false;
    std::string weights, svg;
    sample->add_option("--size", size, "diamond size");
    sample->add_flag("--uniform", uniform, "all weights one");
    sample->add_option("--weights", weights, "JSON weights file");
    sample->add_option("--samples", samples, "number of samples");
    sample->add_option("--svg", svg, "tiling SVG of the first sample");

    auto* ensemble = app.add_subcommand("ensemble", "fixed-endpoint line ensembles");
    ensemble->require_subcommand(1);
    auto* ekernel = ensemble->add_subcommand("kernel", "kernel entries at given space-time pairs");
    add_common(ekernel, ensemble_c);
    std::string spec_file, points_file;
    bool limit = false;
    ekernel->add_option("--spec", spec_file, "JSON ensemble spec");
    ekernel->add_option("--points", points_file, "lines 'r x r' y'");
    ekernel->add_flag("--limit", limit, "also the N -> infinity kernel");

    auto* bessel = app.add_subcommand("bessel", "distance of the rescaled kernel to the discrete Bessel kernel");
    add_common(bessel, bessel_c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    auto set_threads = [](const Common& c) {
        if (c.threads) setenv("INHOMOG_THREADS", std::to_string(*c.threads).c_str(), 1);
    };
    try {
        if (run->parsed()) return set_threads(run_c), cmd_run(run_c);
        if (verify->parsed()) return set_threads(verify_c), cmd_verify(verify_c, suite, scale);
        if (simulate->parsed()) return set_threads(simulate_c), cmd_simulate(simulate_c);
        if (kernel->parsed()) return set_threads(kernel_c), cmd_kernel(kernel_c);
        if (sample->parsed())
            return set_threads(aztec_c), cmd_aztec_sample(aztec_c, size, uniform, weights, samples, svg);
        if (ekernel->parsed()) return set_threads(ensemble_c), cmd_ensemble_kernel(ensemble_c, spec_file, points_file, limit);
        if (bessel->parsed()) return set_threads(bessel_c), cmd_bessel(bessel_c);
    } catch (const ConfigError& e) {
        std::cerr << "invalid configuration at '" << e.key << "': " << e.what() << "\n";
        return 2;
    }
    return 2;
}
