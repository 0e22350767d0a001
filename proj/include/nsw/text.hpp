#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace nsw {

/// 17 significant digits, enough to round-trip any double. NaN prints as "nan".
[[nodiscard]] std::string format_real(double v);

/// Parses a full token as a double ("nan"/"NaN" accepted). Leading and
/// trailing blanks are ignored; anything else left over is a failure.
[[nodiscard]] std::optional<double> parse_real(std::string_view token);

[[nodiscard]] std::string_view trim(std::string_view s) noexcept;

}  // namespace nsw
