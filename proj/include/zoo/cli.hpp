#pragma once

#include "zoo/graph.hpp"
#include "zoo/manifest.hpp"

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace zoo::cli {

/// Exit codes of the `zoo` command.
enum ExitCode : int { kOk = 0, kUsage = 1, kValidation = 2, kIo = 3, kIntegrity = 4 };

/// Maps an exception thrown by any module onto an exit code.
int exit_code_for(const std::exception& e);

/// Runs the command line `args` (without the program name). Errors are
/// written to `err` as one line starting with `error[CODE]:`.
int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli(int argc, const char* const* argv);

/// I/O signature the `build` subcommand gives each model.
void model_signature(std::string_view model, const Graph& graph, TypeSignature& inputs, TypeSignature& outputs);

/// Builds `model` with seeded weights and packages it into `dir`.
/// `image_size` overrides the InceptionV3 input resolution when nonzero.
ServiceManifest build_model_service(std::string_view model, std::uint64_t seed, const std::filesystem::path& dir,
                                    std::int64_t image_size = 0);

struct BenchResult {
    std::string model;
    std::vector<double> latencies_us;
    double median_us = 0.0;
    std::int64_t param_bytes = 0;
    std::int64_t node_count = 0;
};

/// Median of `values`; the mean of the two middle values for even counts.
double median(std::vector<double> values);

BenchResult bench_model(std::string_view model, int repeat, std::uint64_t seed);

/// `model,rep,latency_us,param_bytes,node_count`, one row per repetition
/// followed by a `median` row per model.
std::string bench_csv(const std::vector<BenchResult>& results);

}  // namespace zoo::cli
