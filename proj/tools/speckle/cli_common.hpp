#pragma once

#include "speckle/config.hpp"
#include "speckle/gridio.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>

namespace speckle::cli {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kParameter = 2, kIo = 3, kVerification = 4 };

/// Flags shared by every subcommand.
struct CommonOptions {
    std::uint64_t seed = 0;
    std::string out;
    int threads = 0;  // 0 = hardware concurrency
    std::string config;
    bool json = false;
};

void add_common_options(CLI::App& cmd, CommonOptions& opts, bool out_required);

/// Applies --threads and returns the effective worker count.
int apply_threads(const CommonOptions& opts);

/// Defaults, or the --config file when given.
ToolkitConfig load_toolkit_config(const CommonOptions& opts);

fs::path prepare_out_dir(const std::string& out);

/// Writes a single-channel grid and records its SHA-256 under outputs[name].
void write_output(const fs::path& dir, const std::string& name, const Image2D& img, GridSemantic semantic,
                  json& outputs);

Image2D with_pitch(const Image2D& img, double pixel_pitch);

/// Writes summary.json into dir (when dir is non-empty) and prints either
/// the JSON document or the one-line message. Only the "timing" and
/// "threads" members of a summary may differ between identical runs.
void emit_summary(const CommonOptions& opts, const fs::path& dir, const json& summary, const std::string& message);

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace speckle::cli
