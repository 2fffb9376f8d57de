#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ptsim {

/// Absolute UTC instant with one-second resolution.
using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

/// Accepts RFC 3339 (`2024-03-01T09:00:00Z`, `...+02:00`, optional
/// fractional seconds which are truncated) and `YYYY-MM-DD HH:MM:SS`, the
/// latter taken as UTC.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Canonical output form, `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_timestamp(Timestamp t);

inline Timestamp from_epoch_seconds(std::int64_t s) { return Timestamp{Seconds{s}}; }
inline std::int64_t to_epoch_seconds(Timestamp t) { return t.time_since_epoch().count(); }

}  // namespace ptsim
