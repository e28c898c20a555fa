#pragma once

#include <CLI11.hpp>

#include <functional>

namespace speckle::cli {

/// Adds every subcommand; the parsed one stores its runner in `action`.
void register_commands(CLI::App& app, std::function<int()>& action);

}  // namespace speckle::cli
