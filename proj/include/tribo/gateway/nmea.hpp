#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace tribo::gw {

struct GpsFix {
    std::string sentence;  // "GGA" or "RMC"
    std::string time_utc;  // hhmmss(.ss) as sent
    double latitude = 0.0;   // degrees, south negative
    double longitude = 0.0;  // degrees, west negative
    int quality = 0;         // GGA fix quality; RMC reports 1 when active
    int satellites = 0;
    std::optional<double> speed_knots;
    std::optional<double> course_deg;
    bool valid = false;  // position present and, for RMC, status 'A'
};

/// Two uppercase hex digits of the XOR of every byte of `body`.
std::string nmea_checksum(std::string_view body);

/// Parses one GGA or RMC sentence (any talker id). A trailing CR/LF is ignored.
/// Errors: ChecksumError, Unsupported, ParseError.
GpsFix parse_nmea(std::string_view line);

/// "$GPGGA,...*HH" for a position; no trailing newline.
std::string format_gga(double latitude, double longitude, int quality, int satellites, std::string_view time_utc);

}  // namespace tribo::gw
