#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hhca/io.hpp"

namespace hhca::cli {

// a request failed numerically; carries the request label for stderr
struct RequestError : std::runtime_error {
    RequestError(const std::string& request, const std::string& what)
        : std::runtime_error(what), request(request) {}
    std::string request;
};

struct ResolvedScenario {
    std::string label;  // empty for a single-point scenario
    ModelSpec model;
    StimulusProtocol protocol;
    IntegratorOptions integrator;
    double t_end = 0.0;
    std::optional<std::vector<double>> initial_state;
    std::vector<Json> requests;
};

struct Scenario {
    std::string name;
    std::vector<ResolvedScenario> points;
};

// Validates the whole file up front; throws ValidationError.
Scenario parse_scenario(const Json& j);
Scenario load_scenario(const std::filesystem::path& path);

ModelSpec parse_model(const Json& j);

struct RunOptions {
    int jobs = 1;
    std::optional<double> rtol, atol;
};

// Runs every point, writes outputs plus summary.txt and manifest.json under out.
// Returns the manifest.
Json run_scenario(const Scenario& s, const std::filesystem::path& out, const RunOptions& opts = {});

// every regular file under dir except manifest.json, sorted, with SHA-256
Json build_manifest(const std::filesystem::path& dir, const std::string& scenario);
std::string sha256_hex(const std::string& bytes);

std::filesystem::path recipe_dir();
std::vector<std::string> recipe_names(const std::filesystem::path& dir = recipe_dir());

}  // namespace hhca::cli
