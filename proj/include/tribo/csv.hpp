#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "tribo/signal.hpp"

namespace tribo::csv {

// Layout: header `t,ch1[,ch2,...]`, one row per sample, `t` in seconds with
// six decimals, values printed with round-trip precision.

void write_signals(std::ostream& os, const std::vector<Signal>& channels);
void write_signals(const std::filesystem::path& path, const std::vector<Signal>& channels);
void write_signal(const std::filesystem::path& path, const Signal& s);
void write_record(const std::filesystem::path& path, const MultiChannelRecord& r);

/// Reads any number of channels; the sample rate is recovered from the `t` column.
std::vector<Signal> read_signals(std::istream& is);
std::vector<Signal> read_signals(const std::filesystem::path& path);

/// Reads a 4-channel file. Throws ParseError for other channel counts.
MultiChannelRecord read_record(const std::filesystem::path& path);

}  // namespace tribo::csv
