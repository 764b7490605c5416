#pragma once

#include <CLI11.hpp>

namespace dag::cli {

/// Registers every subcommand on `app`. Each subcommand's callback does the
/// work and throws on failure.
void register_commands(CLI::App& app);

}  // namespace dag::cli
