#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace segtrack {

using UtcSeconds = std::chrono::sys_seconds;

[[nodiscard]] std::int64_t now_epoch_ms();

// "2026-10-15T08:30:00Z"
[[nodiscard]] std::string format_rfc3339(UtcSeconds t);

// Accepts "YYYY-MM-DDTHH:MM:SS" followed by an optional fraction (truncated)
// and "Z" or a "+HH:MM"/"-HH:MM" offset. Throws Error(InvalidArgument).
[[nodiscard]] UtcSeconds parse_rfc3339(std::string_view text);

// UTC calendar day of an epoch-millisecond instant as "YYYYMMDD".
[[nodiscard]] std::string utc_day_stamp(std::int64_t epoch_ms);

}  // namespace segtrack
