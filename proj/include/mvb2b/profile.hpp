#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvb2b {

inline constexpr double kDefaultStepHours = 0.5;

// Uniformly sampled power series in kW, load-positive. Immutable once built;
// construction validates dt > 0, nonempty, and all values finite.
class Profile {
public:
    Profile(std::vector<double> values_kw, double dt_hours = kDefaultStepHours,
            std::string label = {});

    static Profile zeros(std::size_t steps, double dt_hours = kDefaultStepHours,
                         std::string label = {});

    double dt_hours() const noexcept { return dt_hours_; }
    std::size_t size() const noexcept { return values_.size(); }
    const std::string& label() const noexcept { return label_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    // Total duration in hours.
    double span_hours() const noexcept { return dt_hours_ * static_cast<double>(size()); }

    Profile relabeled(std::string label) const;

    friend bool operator==(const Profile& a, const Profile& b) {
        return a.dt_hours_ == b.dt_hours_ && a.values_ == b.values_;
    }

private:
    std::vector<double> values_;
    double dt_hours_;
    std::string label_;
};

// Throws ValidationError unless both share dt and length. `what` names the
// operation in the message.
void require_aligned(const Profile& a, const Profile& b, const char* what);

// Element-wise sum of a nonempty list of aligned profiles.
Profile aggregate(std::span<const Profile> profiles);
Profile aggregate(std::span<const Profile* const> profiles);

// Maximum value over all steps.
double peak(const Profile& p);

// Element-wise multiply by factor >= 0.
Profile scale(const Profile& p, double factor);

// Profile CSV: header `timestamp,kw` or `kw`, one row per step.
//
// With timestamps, the step length is taken from their spacing; when
// expected_dt_hours is also given, every interval must match it within one
// second. Without timestamps the step length is expected_dt_hours, or the
// 0.5 h default.
Profile parse_profile_csv(const std::filesystem::path& path,
                          std::optional<double> expected_dt_hours = std::nullopt);
Profile parse_profile_csv(std::istream& in, std::optional<double> expected_dt_hours = std::nullopt,
                          std::string label = {});

// Writes `kw` format; values use the shortest text that parses back to the
// identical double.
// With `timestamps`, writes `timestamp,kw` starting at 2021-01-01T00:00:00 so
// the step length survives the round trip.
void write_profile_csv(std::ostream& out, const Profile& p, bool timestamps = false);
void write_profile_csv(const std::filesystem::path& path, const Profile& p, bool timestamps = false);

// `YYYY-MM-DDTHH:MM:SS` for whole seconds since the Unix epoch.
std::string format_iso8601(long long seconds);

// Shortest round-trip decimal text for a double. Used by every CSV writer.
std::string format_number(double v);

// Seconds since 1970-01-01T00:00:00Z for an ISO-8601 timestamp. Accepts
// `YYYY-MM-DD[T| ]HH:MM[:SS[.fff]][Z|+hh:mm|-hh:mm]`, `YYYY-MM-DD`, or a bare
// time of day `HH:MM[:SS]`. Returns nullopt on malformed text.
std::optional<double> parse_iso8601_seconds(std::string_view text);

}  // namespace mvb2b
