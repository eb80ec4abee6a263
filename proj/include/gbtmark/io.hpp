#pragma once

// File formats: PCM16 mono WAV, plain PBM (P1) and the text embedding key.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <span>
#include <string_view>
#include <system_error>
#include <vector>

#include "gbtmark/audio.hpp"
#include "gbtmark/error.hpp"
#include "gbtmark/watermark.hpp"

namespace gbtmark {

namespace detail {

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string() + " for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError("failed reading " + path.string());
    return bytes;
}

inline void write_bytes(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out)
        throw IoError("failed writing " + path.string());
}

inline std::uint32_t le32(const std::uint8_t* p) noexcept {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

inline std::uint16_t le16(const std::uint8_t* p) noexcept {
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

inline void put_le32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_le16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{})
        throw ValidationError("cannot format number");
    return std::string(buf.data(), end);
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    if (text.empty())
        return false;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && end == text.data() + text.size();
}

} // namespace detail

inline AudioSignal parse_wav(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != "RIFF" ||
        std::string_view(reinterpret_cast<const char*>(bytes.data() + 8), 4) != "WAVE")
        throw FormatError("not a RIFF/WAVE file");

    bool have_fmt = false;
    AudioSignal signal;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::string_view id(reinterpret_cast<const char*>(bytes.data() + pos), 4);
        const std::size_t size = detail::le32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (size > bytes.size() - body)
            throw FormatError("WAV chunk '" + std::string(id) + "' runs past end of file");

        if (id == "fmt ") {
            if (size < 16)
                throw FormatError("WAV fmt chunk too short");
            const std::uint8_t* p = bytes.data() + body;
            const auto format = detail::le16(p);
            const auto channels = detail::le16(p + 2);
            const auto rate = detail::le32(p + 4);
            const auto bits = detail::le16(p + 14);
            if (format != 1)
                throw FormatError("unsupported WAV audio_format " + std::to_string(format) + " (need 1, PCM)");
            if (channels != 1)
                throw FormatError("unsupported WAV channels " + std::to_string(channels) + " (need mono)");
            if (bits != 16)
                throw FormatError("unsupported WAV bits_per_sample " + std::to_string(bits) + " (need 16)");
            if (rate == 0 || rate > 1'000'000)
                throw FormatError("invalid WAV sample_rate " + std::to_string(rate));
            signal.sample_rate = static_cast<int>(rate);
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt)
                throw FormatError("WAV data chunk precedes fmt chunk");
            if (size % 2 != 0)
                throw FormatError("WAV data chunk holds a partial 16-bit sample");
            signal.samples.resize(size / 2);
            for (std::size_t i = 0; i < signal.samples.size(); ++i) {
                const auto raw = static_cast<std::int16_t>(detail::le16(bytes.data() + body + 2 * i));
                signal.samples[i] = raw / 32768.0;
            }
            return signal;
        }
        pos = body + size + (size & 1);
    }
    throw FormatError(have_fmt ? "WAV file has no data chunk" : "WAV file has no fmt chunk");
}

inline AudioSignal read_wav(const std::filesystem::path& path) {
    const auto bytes = detail::read_bytes(path);
    try {
        return parse_wav(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline std::string encode_wav(const AudioSignal& signal) {
    if (signal.sample_rate <= 0)
        throw ValidationError("sample rate must be positive");
    const auto data_bytes = static_cast<std::uint32_t>(signal.size() * 2);
    std::string out;
    out.reserve(44 + data_bytes);
    out += "RIFF";
    detail::put_le32(out, 36 + data_bytes);
    out += "WAVEfmt ";
    detail::put_le32(out, 16);
    detail::put_le16(out, 1);
    detail::put_le16(out, 1);
    detail::put_le32(out, static_cast<std::uint32_t>(signal.sample_rate));
    detail::put_le32(out, static_cast<std::uint32_t>(signal.sample_rate) * 2);
    detail::put_le16(out, 2);
    detail::put_le16(out, 16);
    out += "data";
    detail::put_le32(out, data_bytes);
    for (double s : signal.samples) {
        const double scaled = std::round(s * 32767.0);
        const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
        detail::put_le16(out, static_cast<std::uint16_t>(v));
    }
    return out;
}

inline void write_wav(const std::filesystem::path& path, const AudioSignal& signal) {
    detail::write_bytes(path, encode_wav(signal));
}

// Plain PBM. Pixel 1 (black) is watermark bit 1.
inline WatermarkImage parse_pbm(std::string_view text) {
    constexpr std::size_t kMaxDimension = 4096;
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < text.size()) {
            if (text[pos] == '#') {
                while (pos < text.size() && text[pos] != '\n')
                    ++pos;
            } else if (std::isspace(static_cast<unsigned char>(text[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_dimension = [&](const char* what) {
        skip_space();
        const std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
            ++pos;
        std::size_t value = 0;
        if (!detail::parse_number(text.substr(start, pos - start), value) || value == 0 || value > kMaxDimension)
            throw FormatError(std::string("PBM ") + what + " missing or out of range (1.." +
                              std::to_string(kMaxDimension) + ")");
        return value;
    };

    if (text.substr(0, 2) != "P1")
        throw FormatError("PBM magic must be P1");
    pos = 2;
    if (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) && text[pos] != '#')
        throw FormatError("PBM magic must be followed by whitespace");
    const std::size_t width = read_dimension("width");
    const std::size_t height = read_dimension("height");

    std::vector<std::uint8_t> bits;
    bits.reserve(width * height);
    while (bits.size() < width * height) {
        skip_space();
        if (pos >= text.size())
            throw FormatError("PBM raster truncated after " + std::to_string(bits.size()) + " pixels");
        const char c = text[pos++];
        if (c != '0' && c != '1')
            throw FormatError(std::string("PBM raster contains invalid character '") + c + "'");
        bits.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return WatermarkImage(width, height, std::move(bits));
}

inline WatermarkImage read_pbm(const std::filesystem::path& path) {
    const auto bytes = detail::read_bytes(path);
    try {
        return parse_pbm(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline std::string encode_pbm(const WatermarkImage& image) {
    image.validate();
    std::string out = "P1\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n";
    for (std::size_t r = 0; r < image.height; ++r) {
        for (std::size_t c = 0; c < image.width; ++c) {
            if (c > 0)
                out += ' ';
            out += image.at(r, c) ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

inline void write_pbm(const std::filesystem::path& path, const WatermarkImage& image) {
    detail::write_bytes(path, encode_pbm(image));
}

inline std::string encode_key(const EmbeddingKey& key) {
    key.validate();
    std::string out;
    auto line = [&out](std::string_view name, const std::string& value) {
        out.append(name).append(" ").append(value).append("\n");
    };
    line("version", std::to_string(key.format_version));
    line("sample_rate", std::to_string(key.sample_rate));
    line("frame_size", std::to_string(key.params.graph.frame_size));
    line("ws", detail::format_double(key.params.ws));
    line("coeff_fraction", detail::format_double(key.params.coeff_fraction));
    line("w1", detail::format_double(key.params.graph.w1));
    line("w2", detail::format_double(key.params.graph.w2));
    line("wm_width", std::to_string(key.watermark_width));
    line("wm_height", std::to_string(key.watermark_height));
    for (const FrameRecord& rec : key.records)
        out.append(std::to_string(rec.frame_index)).append(" ").append(detail::format_double(rec.s_max_original)).append("\n");
    return out;
}

inline EmbeddingKey parse_key(std::string_view text) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos)
            break;
        text.remove_prefix(nl + 1);
    }

    auto split = [](std::string_view line, std::size_t lineno) {
        const auto sp = line.find(' ');
        if (sp == std::string_view::npos || line.find(' ', sp + 1) != std::string_view::npos)
            throw KeyError("key line " + std::to_string(lineno) + ": expected exactly two fields");
        return std::pair{line.substr(0, sp), line.substr(sp + 1)};
    };

    constexpr std::array<std::string_view, 9> kHeader{"version", "sample_rate", "frame_size", "ws",
                                                      "coeff_fraction", "w1", "w2", "wm_width", "wm_height"};
    if (lines.size() < kHeader.size())
        throw KeyError("key truncated: header incomplete");

    std::array<std::string_view, kHeader.size()> values;
    for (std::size_t i = 0; i < kHeader.size(); ++i) {
        auto [name, value] = split(lines[i], i + 1);
        if (name != kHeader[i])
            throw KeyError("key line " + std::to_string(i + 1) + ": expected '" + std::string(kHeader[i]) +
                           "', found '" + std::string(name) + "'");
        values[i] = value;
    }

    EmbeddingKey key;
    auto field = [&](std::size_t i, auto& out) {
        if (!detail::parse_number(values[i], out))
            throw KeyError("key field '" + std::string(kHeader[i]) + "' is malformed");
    };
    field(0, key.format_version);
    if (key.format_version != EmbeddingKey::kFormatVersion)
        throw KeyError("unsupported key version " + std::to_string(key.format_version));
    field(1, key.sample_rate);
    field(2, key.params.graph.frame_size);
    field(3, key.params.ws);
    field(4, key.params.coeff_fraction);
    field(5, key.params.graph.w1);
    field(6, key.params.graph.w2);
    field(7, key.watermark_width);
    field(8, key.watermark_height);

    std::size_t end = lines.size();
    while (end > kHeader.size() && lines[end - 1].empty())
        --end;
    for (std::size_t i = kHeader.size(); i < end; ++i) {
        auto [index, smax] = split(lines[i], i + 1);
        FrameRecord rec;
        if (!detail::parse_number(index, rec.frame_index) || !detail::parse_number(smax, rec.s_max_original))
            throw KeyError("key line " + std::to_string(i + 1) + ": malformed record");
        key.records.push_back(rec);
    }
    key.validate();
    return key;
}

inline void write_key(const std::filesystem::path& path, const EmbeddingKey& key) {
    detail::write_bytes(path, encode_key(key));
}

inline EmbeddingKey read_key(const std::filesystem::path& path) {
    const auto bytes = detail::read_bytes(path);
    try {
        return parse_key(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } catch (const KeyError& e) {
        throw KeyError(path.string() + ": " + e.what());
    }
}

} // namespace gbtmark
