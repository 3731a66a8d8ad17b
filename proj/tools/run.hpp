#pragma once

#include "keyatm/model_base.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace keyatm::cli {

enum ExitStatus : int { kOk = 0, kFailure = 1, kConfigError = 2, kSamplerFault = 3 };

struct RunConfig {
    std::string model = "base"; // base | wlda | covariate | dynamic
    std::string corpus;
    std::string keywords;
    std::vector<std::string> covariates;
    std::string scenarios;
    int k_extra = 0;
    long iterations = 1500;
    long thinning = 10;
    double burn_in = 0.5;
    std::vector<std::uint64_t> seeds{1};
    int states = 5;
    bool weighting = true;
    int top_n = 10;
    std::string init = "random"; // random | keywords
    HyperParams hp;

    void validate() const;
    // Stable `key = value` rendering; hashed into the manifest and saved
    // next to the outputs so a run can be resumed.
    std::string canonical() const;
    long burn_in_iterations() const;
};

// Applies `key = value` lines (with # comments) on top of `cfg`.
void apply_config_text(RunConfig& cfg, const std::string& text);
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

std::uint64_t fnv1a(const std::string& text);

// Fits every chain and writes artifacts under `out_dir`.
int fit(const RunConfig& cfg, const std::filesystem::path& out_dir, int workers = 0);
// Continues the chains found in `run_dir` up to `iterations`.
int resume(const std::filesystem::path& run_dir, long iterations, int workers = 0);
// Recomputes summaries from stored traces.
int summarize(const std::filesystem::path& run_dir, double burn_in, int top_n);

// Entry point of the `keyatm` executable; returns the process exit status.
int main(int argc, char** argv);

} // namespace keyatm::cli
