#include "tribo/gateway/nmea.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <vector>

#include "tribo/error.hpp"

namespace tribo::gw {

namespace {

[[noreturn]] void parse_error(const std::string& m) { throw Error(ErrorKind::ParseError, m); }

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
}

std::vector<std::string_view> split(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == ',') {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

double number(std::string_view f, const char* what) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc() || p != f.data() + f.size() || !std::isfinite(v)) {
        parse_error(fmt::format("bad {} field '{}'", what, f));
    }
    return v;
}

int integer(std::string_view f, const char* what) {
    int v = 0;
    const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc() || p != f.data() + f.size()) parse_error(fmt::format("bad {} field '{}'", what, f));
    return v;
}

// ddmm.mmm / dddmm.mmm plus hemisphere letter to signed degrees.
double coordinate(std::string_view value, std::string_view hemi, bool latitude) {
    const double raw = number(value, latitude ? "latitude" : "longitude");
    if (raw < 0.0) parse_error("negative coordinate");
    const double deg = std::floor(raw / 100.0);
    const double minutes = raw - 100.0 * deg;
    if (minutes >= 60.0) parse_error(fmt::format("minutes out of range in '{}'", value));
    double d = deg + minutes / 60.0;
    const char pos = latitude ? 'N' : 'E', neg = latitude ? 'S' : 'W';
    if (hemi.size() != 1 || (hemi[0] != pos && hemi[0] != neg)) parse_error(fmt::format("bad hemisphere '{}'", hemi));
    if (hemi[0] == neg) d = -d;
    if (std::abs(d) > (latitude ? 90.0 : 180.0)) parse_error("coordinate out of range");
    return d;
}

}  // namespace

std::string nmea_checksum(std::string_view body) {
    unsigned x = 0;
    for (char c : body) x ^= static_cast<unsigned char>(c);
    return fmt::format("{:02X}", x);
}

GpsFix parse_nmea(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
    if (line.size() < 4 || line[0] != '$') parse_error("sentence must start with '$'");
    const std::size_t star = line.rfind('*');
    if (star == std::string_view::npos || star + 3 != line.size()) parse_error("missing '*HH' checksum");
    const std::string_view body = line.substr(1, star - 1);
    for (char c : body) {
        if (c < 0x20 || c > 0x7e || c == '$' || c == '*') parse_error("invalid character in sentence");
    }
    const int hi = hex_value(line[star + 1]), lo = hex_value(line[star + 2]);
    if (hi < 0 || lo < 0) parse_error("checksum is not hexadecimal");
    unsigned x = 0;
    for (char c : body) x ^= static_cast<unsigned char>(c);
    if (static_cast<int>(x) != hi * 16 + lo) {
        throw Error(ErrorKind::ChecksumError,
                    fmt::format("checksum {:02X} does not match computed {:02X}", hi * 16 + lo, x));
    }

    const auto f = split(body);
    if (f[0].size() != 5) throw Error(ErrorKind::Unsupported, fmt::format("unsupported sentence '{}'", f[0]));
    const std::string_view type = f[0].substr(2);
    GpsFix fix;
    fix.sentence = std::string(type);
    if (type == "GGA") {
        if (f.size() < 10) parse_error("GGA sentence has too few fields");
        fix.time_utc = std::string(f[1]);
        fix.quality = integer(f[6], "fix quality");
        fix.satellites = f[7].empty() ? 0 : integer(f[7], "satellite count");
        if (fix.quality < 0 || fix.satellites < 0) parse_error("negative GGA count");
        if (f[2].empty() && f[4].empty()) {
            fix.valid = false;
        } else {
            fix.latitude = coordinate(f[2], f[3], true);
            fix.longitude = coordinate(f[4], f[5], false);
            fix.valid = fix.quality > 0;
        }
        return fix;
    }
    if (type == "RMC") {
        if (f.size() < 10) parse_error("RMC sentence has too few fields");
        fix.time_utc = std::string(f[1]);
        if (f[2] != "A" && f[2] != "V") parse_error(fmt::format("bad RMC status '{}'", f[2]));
        const bool active = f[2] == "A";
        if (!f[7].empty()) fix.speed_knots = number(f[7], "speed");
        if (!f[8].empty()) fix.course_deg = number(f[8], "course");
        if (f[3].empty() && f[5].empty()) {
            fix.valid = false;
        } else {
            fix.latitude = coordinate(f[3], f[4], true);
            fix.longitude = coordinate(f[5], f[6], false);
            fix.valid = active;
        }
        fix.quality = fix.valid ? 1 : 0;
        return fix;
    }
    throw Error(ErrorKind::Unsupported, fmt::format("unsupported sentence '{}'", f[0]));
}

std::string format_gga(double latitude, double longitude, int quality, int satellites, std::string_view time_utc) {
    auto ddmm = [](double v, int deg_digits) {
        const double a = std::abs(v);
        double deg = std::floor(a);
        double minutes = (a - deg) * 60.0;
        if (std::round(minutes * 1e4) >= 60.0 * 1e4) {
            deg += 1.0;
            minutes = 0.0;
        }
        return fmt::format("{:0{}d}{:07.4f}", static_cast<int>(deg), deg_digits, minutes);
    };
    const std::string body =
        fmt::format("GPGGA,{},{},{},{},{},{},{:02d},0.9,10.0,M,0.0,M,,", time_utc, ddmm(latitude, 2),
                    latitude < 0 ? 'S' : 'N', ddmm(longitude, 3), longitude < 0 ? 'W' : 'E', quality, satellites);
    return fmt::format("${}*{}", body, nmea_checksum(body));
}

}  // namespace tribo::gw
