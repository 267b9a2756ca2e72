#pragma once

#include <CLI11.hpp>

#include <functional>

namespace angiorecon::cli {

/// Registers every subcommand on `app`. The returned callable runs the one
/// that was selected after parsing.
std::function<void()> register_commands(CLI::App& app);

}  // namespace angiorecon::cli
