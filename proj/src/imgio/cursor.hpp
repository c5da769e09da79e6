#pragma once

#include <cctype>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

#include "hdrt/imgio.hpp"

namespace hdrt::io::detail {

// Upper bound on decoded samples; guards width*height*channels overflow.
inline constexpr std::uint64_t kMaxSamples = std::uint64_t{1} << 30;

/// Byte reader that reports its position in every error.
class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    bool at_end() const { return pos_ >= bytes_.size(); }

    [[noreturn]] void fail(const std::string& what) const { throw ImageIoError(what, pos_); }

    std::uint8_t peek() const {
        if (at_end()) fail("unexpected end of file");
        return bytes_[pos_];
    }
    std::uint8_t get() {
        std::uint8_t b = peek();
        ++pos_;
        return b;
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        if (remaining() < n) fail("truncated payload: need " + std::to_string(n) + " bytes, have " +
                                  std::to_string(remaining()));
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    void expect(std::string_view literal) {
        for (char c : literal) {
            if (at_end() || bytes_[pos_] != static_cast<std::uint8_t>(c))
                fail("malformed header: expected '" + std::string(literal) + "'");
            ++pos_;
        }
    }

    // Netpbm-style whitespace, including '#' comments.
    void skip_space_and_comments() {
        while (!at_end()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (!at_end() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::uint64_t read_uint() {
        skip_space_and_comments();
        if (at_end() || !std::isdigit(bytes_[pos_])) fail("malformed header: expected an integer");
        std::uint64_t v = 0;
        while (!at_end() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > std::numeric_limits<std::uint32_t>::max()) fail("dimension overflow");
            ++pos_;
        }
        return v;
    }

    std::string read_line() {
        std::string line;
        while (!at_end() && bytes_[pos_] != '\n') line.push_back(static_cast<char>(bytes_[pos_++]));
        if (at_end()) fail("malformed header: unterminated line");
        ++pos_;
        return line;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

inline void check_dimensions(const Cursor& cur, std::uint64_t w, std::uint64_t h, std::uint64_t channels) {
    if (w == 0 || h == 0) cur.fail("malformed header: zero dimension");
    if (w > (1u << 20) || h > (1u << 20) || w * h * channels > kMaxSamples) cur.fail("dimension overflow");
}

}  // namespace hdrt::io::detail
