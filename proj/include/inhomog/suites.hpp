#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace inhomog {

// One asserted (or reported) quantity.
struct ResultRecord {
    std::string experiment;
    std::string metric;
    double value = 0.0;
    std::optional<double> stderr_;
    std::optional<double> tolerance;
    std::optional<bool> pass;
    double wall_seconds = 0.0;  // not part of the CSV, which must be reproducible
};

struct SuiteOptions {
    std::uint64_t seed = 7;
    double replica_scale = 1.0;  // multiplies every Monte Carlo replica count
};

// toeplitz, interlacing, dynamics, correlations, edges, aztec, conditioned, ensembles, bessel
const std::vector<std::string>& suite_names();
bool is_suite(const std::string& name);  // also accepts "all"
std::vector<ResultRecord> run_suite(const std::string& name, const SuiteOptions& opt = {});

bool all_pass(const std::vector<ResultRecord>& records);
// Identifier "experiment/metric" of the first failing record, empty when none fails.
std::string first_failure(const std::vector<ResultRecord>& records);

std::string records_csv(const std::vector<ResultRecord>& records);
std::string records_jsonl(const std::vector<ResultRecord>& records);

}  // namespace inhomog
