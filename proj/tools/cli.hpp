#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tribo/gait.hpp"
#include "tribo/pipeline.hpp"
#include "tribo/signal.hpp"

namespace tribo::cli {

void add_signal_commands(CLI::App& app);
void add_model_commands(CLI::App& app);
void add_net_commands(CLI::App& app);

/// 1-based channel pick from a CSV with any number of channels.
Signal read_channel(const std::filesystem::path& path, std::size_t channel);

GaitClass gait_from(const std::string& name);

/// Accepts either a split directory or a dataset root holding `part`/.
DatasetSplit load_split(const std::filesystem::path& dir, const std::string& part = "train");

/// Writes to `path`, or to stdout when it is empty or "-".
void write_text(const std::string& path, const std::string& text);
void print_json(const nlohmann::json& j);

/// Model init seed derived from a command's --seed.
std::uint64_t init_seed(std::uint64_t seed);

}  // namespace tribo::cli
