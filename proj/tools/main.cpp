#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <iostream>

#include "cli.hpp"
#include "tribo/csv.hpp"
#include "tribo/error.hpp"
#include "tribo/rng.hpp"

namespace tribo::cli {

Signal read_channel(const std::filesystem::path& path, std::size_t channel) {
    auto signals = csv::read_signals(path);
    if (channel == 0 || channel > signals.size()) {
        throw Error(ErrorKind::InvalidInput,
                    fmt::format("{} has {} channel(s); channel {} requested", path.string(), signals.size(), channel));
    }
    return std::move(signals[channel - 1]);
}

GaitClass gait_from(const std::string& name) {
    if (auto g = parse_gait_class(name)) return *g;
    throw Error(ErrorKind::InvalidInput, fmt::format("unknown gait class '{}'", name));
}

DatasetSplit load_split(const std::filesystem::path& dir, const std::string& part) {
    if (!std::filesystem::exists(dir / "manifest.json") && std::filesystem::exists(dir / part / "manifest.json")) {
        return read_split(dir / part);
    }
    return read_split(dir);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::IoError, fmt::format("cannot write {}", path));
    os << text;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump() << std::endl; }

std::uint64_t init_seed(std::uint64_t seed) { return derive_seed(seed, 0x1A17); }

}  // namespace tribo::cli

int main(int argc, char** argv) {
    CLI::App app{"Triboelectric gait sensing toolkit: signal processing, models, and the gateway."};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");
    spdlog::set_default_logger(spdlog::stderr_color_mt("tribo"));
    spdlog::set_level(spdlog::level::warn);
    app.add_option("--log-level", "trace, debug, info, warn, error, off (default warn)")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
        ->each([](const std::string& v) { spdlog::set_level(spdlog::level::from_str(v)); });

    tribo::cli::add_signal_commands(app);
    tribo::cli::add_model_commands(app);
    tribo::cli::add_net_commands(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        const auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.back()->help());
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::cerr << "error: UsageError: " << msg << std::endl;
        return 2;
    } catch (const tribo::Error& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::cerr << "error: " << msg << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::cerr << "error: Internal: " << msg << std::endl;
        return 1;
    }
    return 0;
}
