#include "tribo/csv.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "tribo/error.hpp"

namespace tribo::csv {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view field, std::size_t line_no) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw Error(ErrorKind::ParseError, fmt::format("line {}: bad number '{}'", line_no, field));
    }
    return v;
}

}  // namespace

void write_signals(std::ostream& os, const std::vector<Signal>& channels) {
    if (channels.empty()) throw Error(ErrorKind::ShapeError, "no channels to write");
    const std::size_t n = channels[0].size();
    const double fs = channels[0].sample_rate_hz;
    for (const Signal& s : channels) {
        if (s.size() != n || s.sample_rate_hz != fs) throw Error(ErrorKind::ShapeError, "channels differ in shape");
    }
    std::string header = "t";
    for (std::size_t c = 0; c < channels.size(); ++c) header += fmt::format(",ch{}", c + 1);
    os << header << '\n';
    fmt::memory_buffer buf;
    for (std::size_t i = 0; i < n; ++i) {
        buf.clear();
        fmt::format_to(std::back_inserter(buf), "{:.6f}", static_cast<double>(i) / fs);
        for (const Signal& s : channels) fmt::format_to(std::back_inserter(buf), ",{}", s.samples[i]);
        buf.push_back('\n');
        os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
}

void write_signals(const std::filesystem::path& path, const std::vector<Signal>& channels) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    write_signals(os, channels);
    if (!os) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

void write_signal(const std::filesystem::path& path, const Signal& s) { write_signals(path, {s}); }

void write_record(const std::filesystem::path& path, const MultiChannelRecord& r) {
    write_signals(path, std::vector<Signal>(r.channels.begin(), r.channels.end()));
}

std::vector<Signal> read_signals(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    // Skip comment lines ahead of the header.
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line[0] != '#') break;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line, ',');
    if (header.size() < 2 || header[0] != "t") {
        throw Error(ErrorKind::ParseError, "expected header 't,ch1,...'");
    }
    const std::size_t nch = header.size() - 1;
    for (std::size_t c = 0; c < nch; ++c) {
        if (header[c + 1] != fmt::format("ch{}", c + 1)) {
            throw Error(ErrorKind::ParseError, fmt::format("unexpected column '{}'", header[c + 1]));
        }
    }
    std::vector<double> t;
    std::vector<std::vector<double>> cols(nch);
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        const auto fields = split(line, ',');
        if (fields.size() != nch + 1) {
            throw Error(ErrorKind::ParseError, fmt::format("line {}: expected {} fields", line_no, nch + 1));
        }
        t.push_back(parse_double(fields[0], line_no));
        for (std::size_t c = 0; c < nch; ++c) cols[c].push_back(parse_double(fields[c + 1], line_no));
    }
    if (t.empty()) throw Error(ErrorKind::ParseError, "no samples");
    double fs = 1.0;
    if (t.size() >= 2) {
        const double span = t.back() - t.front();
        if (!(span > 0.0)) throw Error(ErrorKind::ParseError, "time column is not increasing");
        // t carries six decimals; rounding to mHz removes the quantization.
        fs = std::round(static_cast<double>(t.size() - 1) / span * 1000.0) / 1000.0;
    }
    std::vector<Signal> out;
    out.reserve(nch);
    for (auto& col : cols) out.emplace_back(std::move(col), fs);
    for (const Signal& s : out) s.validate();
    return out;
}

std::vector<Signal> read_signals(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    return read_signals(is);
}

MultiChannelRecord read_record(const std::filesystem::path& path) {
    auto chans = read_signals(path);
    if (chans.size() != kChannelCount) {
        throw Error(ErrorKind::ParseError, fmt::format("{}: expected 4 channels, got {}", path.string(), chans.size()));
    }
    MultiChannelRecord r;
    for (std::size_t c = 0; c < kChannelCount; ++c) r.channels[c] = std::move(chans[c]);
    return r;
}

}  // namespace tribo::csv
