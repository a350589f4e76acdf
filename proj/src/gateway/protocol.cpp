#include "tribo/gateway/protocol.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>

#include "tribo/error.hpp"

namespace tribo::gw {

namespace {

[[noreturn]] void protocol_error(const std::string& m) { throw Error(ErrorKind::ProtocolError, m); }

// Bounds-checked little-endian reader; every access is validated against the span.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

    template <typename T>
    T uint() {
        if (b_.size() - pos_ < sizeof(T)) protocol_error("read past end of payload");
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(b_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return v;
    }

    float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }

private:
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Header {
    FrameType type;
    std::uint32_t length;
};

Header parse_header(std::span<const std::uint8_t> b) {
    const auto type = frame_type_from_byte(b[0]);
    if (!type) protocol_error(fmt::format("unknown frame type 0x{:02x}", b[0]));
    const std::uint32_t len = Reader(b.subspan(1, 4)).uint<std::uint32_t>();
    if (len > kMaxPayload) protocol_error(fmt::format("frame length {} exceeds {}", len, kMaxPayload));
    return {*type, len};
}

void expect(const Frame& f, FrameType t, std::size_t size) {
    if (f.type != t) protocol_error(fmt::format("expected a {} frame, got {}", to_string(t), to_string(f.type)));
    if (f.payload.size() != size) {
        protocol_error(fmt::format("{} payload must be {} bytes, got {}", to_string(t), size, f.payload.size()));
    }
}

}  // namespace

std::optional<FrameType> frame_type_from_byte(std::uint8_t b) noexcept {
    switch (b) {
        case 0x01: return FrameType::Sensor;
        case 0x02: return FrameType::Heart;
        case 0x03: return FrameType::GpsLine;
        case 0x10: return FrameType::Event;
        default: return std::nullopt;
    }
}

std::string_view to_string(FrameType t) noexcept {
    switch (t) {
        case FrameType::Sensor: return "sensor";
        case FrameType::Heart: return "heart";
        case FrameType::GpsLine: return "gps";
        case FrameType::Event: return "event";
    }
    return "?";
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
    if (f.payload.size() > kMaxPayload) protocol_error("payload too large");
    std::vector<std::uint8_t> out;
    out.reserve(kFrameHeaderSize + f.payload.size());
    out.push_back(static_cast<std::uint8_t>(f.type));
    put(out, static_cast<std::uint32_t>(f.payload.size()));
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFrameHeaderSize) protocol_error(fmt::format("truncated header ({} bytes)", bytes.size()));
    const Header h = parse_header(bytes);
    const std::size_t available = bytes.size() - kFrameHeaderSize;
    if (available < h.length) protocol_error(fmt::format("frame declares {} payload bytes, {} present", h.length, available));
    if (available > h.length) protocol_error(fmt::format("{} trailing bytes after frame", available - h.length));
    const auto payload = bytes.subspan(kFrameHeaderSize, h.length);
    return Frame{h.type, {payload.begin(), payload.end()}};
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
    if (pos_ > 0 && pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    } else if (pos_ > 4096) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
        pos_ = 0;
    }
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameDecoder::next() {
    const std::span<const std::uint8_t> rest(buf_.data() + pos_, buf_.size() - pos_);
    if (rest.size() < kFrameHeaderSize) return std::nullopt;
    const Header h = parse_header(rest);
    if (rest.size() - kFrameHeaderSize < h.length) return std::nullopt;
    const auto payload = rest.subspan(kFrameHeaderSize, h.length);
    Frame f{h.type, {payload.begin(), payload.end()}};
    pos_ += kFrameHeaderSize + h.length;
    return f;
}

Frame to_frame(const SensorPacket& p) {
    Frame f{FrameType::Sensor, {}};
    f.payload.reserve(kSensorPayloadSize);
    put(f.payload, p.timestamp_us);
    put(f.payload, p.seq);
    for (float v : p.values) put(f.payload, std::bit_cast<std::uint32_t>(v));
    return f;
}

Frame to_frame(const HeartPacket& p) {
    Frame f{FrameType::Heart, {}};
    f.payload.reserve(kHeartPayloadSize);
    put(f.payload, p.timestamp_us);
    put(f.payload, p.seq);
    put(f.payload, std::bit_cast<std::uint32_t>(p.value));
    return f;
}

Frame gps_frame(std::string_view line) { return Frame{FrameType::GpsLine, {line.begin(), line.end()}}; }

Frame event_frame(std::string_view json) { return Frame{FrameType::Event, {json.begin(), json.end()}}; }

SensorPacket decode_sensor(const Frame& f) {
    expect(f, FrameType::Sensor, kSensorPayloadSize);
    Reader r(f.payload);
    SensorPacket p;
    p.timestamp_us = r.uint<std::uint64_t>();
    p.seq = r.uint<std::uint32_t>();
    for (float& v : p.values) {
        v = r.f32();
        if (!std::isfinite(v)) protocol_error("non-finite sensor value");
    }
    return p;
}

HeartPacket decode_heart(const Frame& f) {
    expect(f, FrameType::Heart, kHeartPayloadSize);
    Reader r(f.payload);
    HeartPacket p;
    p.timestamp_us = r.uint<std::uint64_t>();
    p.seq = r.uint<std::uint32_t>();
    p.value = r.f32();
    if (!std::isfinite(p.value)) protocol_error("non-finite heart sample");
    return p;
}

std::string decode_text(const Frame& f) {
    if (f.type != FrameType::GpsLine && f.type != FrameType::Event) protocol_error("frame does not carry text");
    return {f.payload.begin(), f.payload.end()};
}

}  // namespace tribo::gw
