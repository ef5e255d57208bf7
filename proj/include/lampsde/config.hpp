#pragma once

// Experiment configuration in a sectioned key = value format:
//
//   [model]       id, y0, and the model's parameters by name
//   [grid]        T, dt (simulation step), dt_ref, ladder (comma separated)
//   [scheme]      id, residual_tol, max_iter, eta, closed_form, metric, p
//   [montecarlo]  paths, stream, workers
//   [output]      dir, formats
//
// Step sizes accept "2^-k" as well as decimal literals. '#' and ';' start comments.

#include "lampsde/error_lab.hpp"
#include "lampsde/model.hpp"
#include "lampsde/schemes.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lampsde {

struct ExperimentConfig {
    ModelParams params = CIRParams{};
    std::optional<double> y0;

    double horizon = 1.0;
    double dt = 0x1p-8;
    double dt_ref = 0x1p-15;
    std::vector<double> ladder = {0x1p-11, 0x1p-10, 0x1p-9, 0x1p-8};

    SchemeId scheme = SchemeId::BemTransformed;
    StepSolverConfig solver;
    ErrorMetric metric = ErrorMetric::EndpointLp;
    double p = 2.0;

    std::size_t n_paths = 1000;
    std::uint64_t stream = 1;
    int workers = 1;

    std::optional<std::string> output_dir;
    std::vector<std::string> formats = {"csv", "json"};

    ModelSpec model_spec() const;
    MonteCarloOptions mc_options() const;
    bool wants_format(std::string_view fmt) const;

    bool operator==(const ExperimentConfig&) const;
};

/// Raw section/key/value entries with the line each came from.
class ConfigDocument {
public:
    struct Entry {
        std::string value;
        int line = 0;  // 0 for values set programmatically
    };

    static ConfigDocument parse(std::string_view text, std::string source = "<config>");
    static ConfigDocument load(const std::filesystem::path& file);

    void set(const std::string& section, const std::string& key, std::string value);
    /// Applies "section.key=value".
    void set_assignment(std::string_view assignment);

    const std::string& source() const { return source_; }
    const std::map<std::string, std::map<std::string, Entry>>& sections() const { return sections_; }

private:
    std::string source_ = "<config>";
    std::map<std::string, std::map<std::string, Entry>> sections_;
};

/// Throws ConfigError naming the source, line and field on malformed input.
ExperimentConfig interpret(const ConfigDocument& doc);
ExperimentConfig parse_config(std::string_view text);

/// Text that parse_config maps back to an equal configuration.
std::string serialize_config(const ExperimentConfig& cfg);

/// Parses a real literal or "2^-k" / "2^k".
double parse_real(std::string_view text);

}  // namespace lampsde
