#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "afm/field.hpp"
#include "afm/geometry.hpp"

namespace afm {

// --- annotation documents ----------------------------------------------------
//
// {"width": W, "height": H, "segments": [[x1, y1, x2, y2], ...]}
//
// Coordinates are sub-pixel reals in [0, W] x [0, H]. Unknown keys are
// ignored so sidecar data (e.g. detection scores) can ride along.

inline LineSegmentMap read_annotation(std::string_view bytes) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ValidationError("annotation root must be an object");
    if (!doc.contains("width") || !doc.contains("height") || !doc.contains("segments"))
        throw ValidationError("annotation requires width, height and segments");
    if (!doc["width"].is_number_integer() || !doc["height"].is_number_integer())
        throw ValidationError("width and height must be integers");

    LineSegmentMap map;
    map.dims.width = doc["width"].get<int>();
    map.dims.height = doc["height"].get<int>();
    const auto& segs = doc["segments"];
    if (!segs.is_array())
        throw ValidationError("segments must be an array");
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const auto& row = segs[i];
        if (!row.is_array() || row.size() != 4)
            throw ValidationError("segment " + std::to_string(i) +
                                  " must be an array of 4 numbers");
        for (const auto& v : row)
            if (!v.is_number())
                throw ValidationError("segment " + std::to_string(i) +
                                      " must contain numbers only");
        map.segments.push_back({{row[0].get<double>(), row[1].get<double>()},
                                {row[2].get<double>(), row[3].get<double>()}});
    }
    validate_segment_map(map);
    return map;
}

namespace detail {

// Shortest-exact decimal form: 17 significant digits round-trip any double.
inline std::string format_coord(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline std::string write_annotation(const LineSegmentMap& map,
                                    const std::vector<double>* scores = nullptr) {
    validate_segment_map(map);
    std::string out;
    out += "{\"width\":" + std::to_string(map.dims.width);
    out += ",\"height\":" + std::to_string(map.dims.height);
    out += ",\"segments\":[";
    for (std::size_t i = 0; i < map.segments.size(); ++i) {
        const LineSegment& s = map.segments[i];
        if (i) out += ',';
        out += '[' + detail::format_coord(s.start.x) + ',' + detail::format_coord(s.start.y) +
               ',' + detail::format_coord(s.end.x) + ',' + detail::format_coord(s.end.y) + ']';
    }
    out += ']';
    if (scores) {
        out += ",\"scores\":[";
        for (std::size_t i = 0; i < scores->size(); ++i) {
            if (i) out += ',';
            out += detail::format_coord((*scores)[i]);
        }
        out += ']';
    }
    out += "}\n";
    return out;
}

// --- binary attraction field files -------------------------------------------
//
// Layout (little-endian):
//   bytes 0..3   magic "AFM1"
//   bytes 4..7   height, u32
//   bytes 8..11  width, u32
//   byte  12     state flags: bit 0 size-normalized, bit 1 stretched
//   bytes 13..   H*W*2 float32 values, row-major, a_x then a_y per pixel

inline constexpr char kAfmMagic[4] = {'A', 'F', 'M', '1'};
inline constexpr std::size_t kAfmHeaderSize = 13;

namespace detail {

inline void append_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint8_t state_to_flags(AfmState s) {
    switch (s) {
        case AfmState::Raw: return 0b00;
        case AfmState::SizeNormalized: return 0b01;
        case AfmState::Stretched: return 0b11;
    }
    throw ValidationError("unknown field state");
}

} // namespace detail

inline std::string write_afm(const AttractionFieldMap& afm) {
    if (afm.dims.width < 1 || afm.dims.height < 1)
        throw ValidationError("field dims must be at least 1x1");
    if (afm.vectors.size() != static_cast<std::size_t>(afm.dims.pixel_count()))
        throw ValidationError("field grid size does not match dims");
    std::string out;
    out.reserve(kAfmHeaderSize + afm.vectors.size() * 8);
    out.append(kAfmMagic, 4);
    detail::append_u32_le(out, static_cast<std::uint32_t>(afm.dims.height));
    detail::append_u32_le(out, static_cast<std::uint32_t>(afm.dims.width));
    out.push_back(static_cast<char>(detail::state_to_flags(afm.state)));
    for (const Vec2& a : afm.vectors) {
        detail::append_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(a.x)));
        detail::append_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(a.y)));
    }
    return out;
}

inline AttractionFieldMap read_afm(std::string_view bytes) {
    if (bytes.size() < kAfmHeaderSize)
        throw ValidationError("truncated field file: missing header");
    if (std::string_view(bytes.data(), 4) != std::string_view(kAfmMagic, 4))
        throw ValidationError("bad magic: not an AFM1 file");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t height = detail::read_u32_le(p + 4);
    const std::uint32_t width = detail::read_u32_le(p + 8);
    const std::uint8_t flags = static_cast<std::uint8_t>(p[12]);
    if (flags > 0b11)
        throw ValidationError("unknown flag bits set");
    if (flags == 0b10)
        throw ValidationError("inconsistent flags: stretched requires size-normalized");
    if (width < 1 || height < 1)
        throw ValidationError("field dims must be at least 1x1");
    const std::size_t expected =
        kAfmHeaderSize + static_cast<std::size_t>(width) * height * 8;
    if (bytes.size() != expected)
        throw ValidationError("payload length mismatch: expected " +
                              std::to_string(expected) + " bytes, got " +
                              std::to_string(bytes.size()));
    AttractionFieldMap afm;
    afm.dims = {static_cast<int>(width), static_cast<int>(height)};
    afm.state = flags == 0b00 ? AfmState::Raw
              : flags == 0b01 ? AfmState::SizeNormalized
                              : AfmState::Stretched;
    afm.vectors.resize(static_cast<std::size_t>(width) * height);
    const unsigned char* cursor = p + kAfmHeaderSize;
    for (Vec2& a : afm.vectors) {
        a.x = std::bit_cast<float>(detail::read_u32_le(cursor));
        a.y = std::bit_cast<float>(detail::read_u32_le(cursor + 4));
        cursor += 8;
    }
    return afm;
}

// --- file helpers -------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open for reading: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError("read failure: " + path.string());
    return bytes;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failure: " + path.string());
}

} // namespace afm
