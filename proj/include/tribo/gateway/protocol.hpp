#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tribo::gw {

enum class FrameType : std::uint8_t {
    Sensor = 0x01,
    Heart = 0x02,
    GpsLine = 0x03,
    Event = 0x10,
};

std::optional<FrameType> frame_type_from_byte(std::uint8_t b) noexcept;
std::string_view to_string(FrameType t) noexcept;

inline constexpr std::size_t kFrameHeaderSize = 5;
inline constexpr std::size_t kMaxPayload = 64 * 1024;

struct Frame {
    FrameType type = FrameType::Sensor;
    std::vector<std::uint8_t> payload;

    bool operator==(const Frame&) const = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& f);

/// Decodes exactly one frame occupying all of `bytes`. Throws ProtocolError
/// when the buffer is truncated, carries trailing bytes, declares more than
/// kMaxPayload bytes, or has an unknown type.
Frame decode_frame(std::span<const std::uint8_t> bytes);

/// Incremental decoder for a byte stream.
class FrameDecoder {
public:
    void feed(std::span<const std::uint8_t> bytes);
    /// Next complete frame, or nullopt when more bytes are needed. Throws
    /// ProtocolError on a bad header; the stream is then unusable.
    std::optional<Frame> next();
    std::size_t buffered() const noexcept { return buf_.size() - pos_; }

private:
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

/// 28-byte payload: u64 timestamp_us, u32 seq, 4 x f32 volts, little-endian.
struct SensorPacket {
    std::uint64_t timestamp_us = 0;
    std::uint32_t seq = 0;
    std::array<float, 4> values{};

    bool operator==(const SensorPacket&) const = default;
};

inline constexpr std::size_t kSensorPayloadSize = 28;

/// 16-byte payload: u64 timestamp_us, u32 seq, f32 ECG sample.
struct HeartPacket {
    std::uint64_t timestamp_us = 0;
    std::uint32_t seq = 0;
    float value = 0.0f;

    bool operator==(const HeartPacket&) const = default;
};

inline constexpr std::size_t kHeartPayloadSize = 16;

Frame to_frame(const SensorPacket& p);
Frame to_frame(const HeartPacket& p);
Frame gps_frame(std::string_view nmea_line);
Frame event_frame(std::string_view json);

/// Throw ProtocolError on a wrong frame type, payload size or non-finite value.
SensorPacket decode_sensor(const Frame& f);
HeartPacket decode_heart(const Frame& f);
std::string decode_text(const Frame& f);

}  // namespace tribo::gw
