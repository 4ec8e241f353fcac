#include "mvb2b/profile.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mvb2b/error.hpp"
#include "mvb2b/kernels.hpp"

namespace mvb2b {

Profile::Profile(std::vector<double> values_kw, double dt_hours, std::string label)
    : values_(std::move(values_kw)), dt_hours_(dt_hours), label_(std::move(label)) {
    if (!(dt_hours_ > 0.0) || !std::isfinite(dt_hours_))
        throw ValidationError("profile '" + label_ + "': step length must be positive and finite");
    if (values_.empty()) throw ValidationError("profile '" + label_ + "': no samples");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]))
            throw ValidationError("profile '" + label_ + "': non-finite value at step " +
                                  std::to_string(i));
    }
}

Profile Profile::zeros(std::size_t steps, double dt_hours, std::string label) {
    return Profile(std::vector<double>(steps, 0.0), dt_hours, std::move(label));
}

Profile Profile::relabeled(std::string label) const {
    Profile copy = *this;
    copy.label_ = std::move(label);
    return copy;
}

void require_aligned(const Profile& a, const Profile& b, const char* what) {
    if (a.dt_hours() != b.dt_hours() || a.size() != b.size()) {
        std::ostringstream msg;
        msg << what << ": profiles are not aligned ('" << a.label() << "' " << a.size()
            << " steps @ " << a.dt_hours() << " h vs '" << b.label() << "' " << b.size()
            << " steps @ " << b.dt_hours() << " h)";
        throw ValidationError(msg.str());
    }
}

Profile aggregate(std::span<const Profile* const> profiles) {
    if (profiles.empty()) throw ValidationError("aggregate: empty profile list");
    const Profile& first = *profiles.front();
    for (const Profile* p : profiles) require_aligned(first, *p, "aggregate");
    std::vector<double> sum(first.values().begin(), first.values().end());
    const auto& k = kernels::active();
    for (std::size_t i = 1; i < profiles.size(); ++i) k.accumulate(sum, profiles[i]->values());
    return Profile(std::move(sum), first.dt_hours());
}

Profile aggregate(std::span<const Profile> profiles) {
    std::vector<const Profile*> ptrs;
    ptrs.reserve(profiles.size());
    for (const Profile& p : profiles) ptrs.push_back(&p);
    return aggregate(std::span<const Profile* const>(ptrs));
}

double peak(const Profile& p) { return kernels::active().max_value(p.values()); }

Profile scale(const Profile& p, double factor) {
    if (!(factor >= 0.0) || !std::isfinite(factor))
        throw ValidationError("scale: factor must be finite and nonnegative");
    std::vector<double> out(p.size());
    kernels::active().scale(p.values(), factor, out);
    return Profile(std::move(out), p.dt_hours(), p.label());
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

// Days from 1970-01-01 for a proleptic Gregorian date.
long long days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

std::optional<double> parse_time_of_day(std::string_view t) {
    // HH:MM[:SS[.fff]]
    if (t.size() < 5 || t[2] != ':') return std::nullopt;
    int hh = 0, mm = 0;
    if (!parse_int(t.substr(0, 2), hh) || !parse_int(t.substr(3, 2), mm)) return std::nullopt;
    double ss = 0.0;
    if (t.size() > 5) {
        if (t[5] != ':' || t.size() < 8) return std::nullopt;
        auto rest = t.substr(6);
        auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), ss);
        if (ec != std::errc{} || p != rest.data() + rest.size()) return std::nullopt;
        if (ss < 0.0 || ss >= 61.0) return std::nullopt;
    }
    if (hh < 0 || hh > 24 || mm < 0 || mm > 59) return std::nullopt;
    return hh * 3600.0 + mm * 60.0 + ss;
}

}  // namespace

std::optional<double> parse_iso8601_seconds(std::string_view text) {
    text = trim(text);
    if (text.size() >= 5 && text[2] == ':') return parse_time_of_day(text);
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0, mo = 0, d = 0;
    if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
        !parse_int(text.substr(8, 2), d))
        return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
    double seconds = static_cast<double>(days_from_civil(y, static_cast<unsigned>(mo),
                                                         static_cast<unsigned>(d))) * 86400.0;
    if (text.size() == 10) return seconds;
    if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
    std::string_view clock = text.substr(11);
    double offset = 0.0;
    if (!clock.empty() && (clock.back() == 'Z' || clock.back() == 'z')) {
        clock.remove_suffix(1);
    } else if (clock.size() > 6) {
        const std::string_view tz = clock.substr(clock.size() - 6);
        if ((tz[0] == '+' || tz[0] == '-') && tz[3] == ':') {
            int oh = 0, om = 0;
            if (!parse_int(tz.substr(1, 2), oh) || !parse_int(tz.substr(4, 2), om))
                return std::nullopt;
            offset = (tz[0] == '+' ? 1.0 : -1.0) * (oh * 3600.0 + om * 60.0);
            clock.remove_suffix(6);
        }
    }
    auto tod = parse_time_of_day(clock);
    if (!tod) return std::nullopt;
    return seconds + *tod - offset;
}

Profile parse_profile_csv(std::istream& in, std::optional<double> expected_dt_hours,
                          std::string label) {
    if (expected_dt_hours && !(*expected_dt_hours > 0.0))
        throw ValidationError("expected step length must be positive");

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty profile file", 1);
    ++line_no;
    const std::string header = lower(trim(line));
    bool with_time = false;
    if (header == "timestamp,kw") {
        with_time = true;
    } else if (header != "kw") {
        throw ParseError("expected header 'timestamp,kw' or 'kw', got '" + std::string(trim(line)) +
                             "'",
                         line_no);
    }

    std::vector<double> values;
    std::vector<double> stamps;
    std::size_t blank_run = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = trim(line);
        if (row.empty()) {
            ++blank_run;
            continue;
        }
        if (blank_run > 0) throw ParseError("blank row inside data", line_no - 1);

        std::string_view value_text = row;
        if (with_time) {
            const auto comma = row.find(',');
            if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos)
                throw ParseError("expected two fields 'timestamp,kw'", line_no);
            auto ts = parse_iso8601_seconds(row.substr(0, comma));
            if (!ts) throw ParseError("malformed timestamp '" + std::string(row.substr(0, comma)) + "'", line_no);
            stamps.push_back(*ts);
            value_text = trim(row.substr(comma + 1));
        } else if (row.find(',') != std::string_view::npos) {
            throw ParseError("expected a single 'kw' field", line_no);
        }

        double v = 0.0;
        const char* first = value_text.data();
        const char* last = first + value_text.size();
        if (!value_text.empty() && *first == '+') ++first;
        auto [p, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || p != last || value_text.empty())
            throw ParseError("malformed value '" + std::string(value_text) + "'", line_no);
        if (!std::isfinite(v))
            throw ValidationError("non-finite value '" + std::string(value_text) + "' (line " +
                                  std::to_string(line_no) + ")");
        values.push_back(v);
    }
    if (values.empty()) throw ParseError("profile has no data rows", line_no);

    double dt = expected_dt_hours.value_or(kDefaultStepHours);
    if (with_time && stamps.size() >= 2) {
        const double expected_s = expected_dt_hours ? *expected_dt_hours * 3600.0
                                                    : stamps[1] - stamps[0];
        if (!(expected_s > 0.0))
            throw ResolutionError("timestamps are not strictly increasing (line 3)");
        for (std::size_t i = 1; i < stamps.size(); ++i) {
            const double step = stamps[i] - stamps[i - 1];
            if (std::abs(step - expected_s) > 1.0) {
                std::ostringstream msg;
                msg << "step spacing " << step << " s between lines " << i + 1 << " and " << i + 2
                    << " does not match expected " << expected_s << " s";
                throw ResolutionError(msg.str());
            }
        }
        if (!expected_dt_hours) dt = expected_s / 3600.0;
    }
    return Profile(std::move(values), dt, std::move(label));
}

Profile parse_profile_csv(const std::filesystem::path& path, std::optional<double> expected_dt_hours) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open profile '" + path.string() + "'");
    try {
        return parse_profile_csv(in, expected_dt_hours, path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ResolutionError& e) {
        throw ResolutionError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string format_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string format_iso8601(long long seconds) {
    long long days = seconds / 86400;
    long long rem = seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    // civil_from_days
    days += 719468;
    const long long era = (days >= 0 ? days : days - 146096) / 146097;
    const auto doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    const long long y = static_cast<long long>(yoe) + era * 400 + (m <= 2);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld", y, m, d, rem / 3600,
                  (rem / 60) % 60, rem % 60);
    return buf;
}

void write_profile_csv(std::ostream& out, const Profile& p, bool timestamps) {
    if (!timestamps) {
        out << "kw\n";
        for (double v : p.values()) out << format_number(v) << '\n';
        return;
    }
    constexpr long long kStart = 1609459200;  // 2021-01-01T00:00:00Z
    const double step_s = p.dt_hours() * 3600.0;
    out << "timestamp,kw\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto t = kStart + std::llround(step_s * static_cast<double>(i));
        out << format_iso8601(t) << ',' << format_number(p[i]) << '\n';
    }
}

void write_profile_csv(const std::filesystem::path& path, const Profile& p, bool timestamps) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    write_profile_csv(out, p, timestamps);
}

}  // namespace mvb2b
