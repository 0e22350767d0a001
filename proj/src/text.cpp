#include "nsw/text.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>

namespace nsw {

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                   std::chars_format::general, 17);
    return {buf.data(), res.ptr};
}

std::string_view trim(std::string_view s) noexcept {
    constexpr std::string_view blanks = " \t\r\n";
    const auto first = s.find_first_not_of(blanks);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(blanks);
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_real(std::string_view token) {
    token = trim(token);
    if (token.empty()) return std::nullopt;
    if (token == "nan" || token == "NaN" || token == "NAN") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) return std::nullopt;
    return v;
}

}  // namespace nsw
