#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bess/errors.hpp"
#include "bess/io.hpp"

namespace bess {

using std::chrono::minutes;
using std::chrono::sys_seconds;

/// Uniform sampling grid. `start` is the UTC instant of the first sample;
/// calendar logic uses local civil time, i.e. UTC shifted by `utc_offset`.
/// A series read without an explicit offset is "naive" and treated as
/// local = UTC.
struct TimeAxis {
    sys_seconds start{};
    int step_minutes = 5;
    std::optional<minutes> utc_offset;

    double step_hours() const { return step_minutes / 60.0; }
    minutes offset() const { return utc_offset.value_or(minutes{0}); }
    sys_seconds instant(std::size_t i) const {
        return start + minutes{static_cast<long long>(i) * step_minutes};
    }
    /// Local civil time of sample i, expressed on the sys clock.
    sys_seconds local(std::size_t i) const { return instant(i) + offset(); }

    TimeAxis shifted(std::size_t steps) const {
        TimeAxis out = *this;
        out.start = instant(steps);
        return out;
    }

    friend bool operator==(const TimeAxis&, const TimeAxis&) = default;
};

struct DemandTag {};
struct PriceTag {};

/// Immutable, validated, uniformly sampled series. DemandSeries holds
/// average power in kW (non-negative); PriceSeries holds $/kWh (any sign).
template <class Tag>
class TimeSeries {
public:
    TimeSeries() = default;
    TimeSeries(TimeAxis axis, std::vector<double> values, std::size_t interpolated = 0)
        : axis_(axis), values_(std::move(values)), interpolated_(interpolated) {
        validate();
    }

    const TimeAxis& axis() const { return axis_; }
    std::span<const double> values() const { return values_; }
    const std::vector<double>& data() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double step_hours() const { return axis_.step_hours(); }
    /// Number of single missing steps filled by linear interpolation at load.
    std::size_t interpolated_steps() const { return interpolated_; }

    TimeSeries slice(std::size_t begin, std::size_t end) const {
        if (begin >= end || end > values_.size()) throw std::out_of_range("TimeSeries::slice");
        return TimeSeries(axis_.shifted(begin),
                          std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(begin),
                                              values_.begin() + static_cast<std::ptrdiff_t>(end)));
    }

private:
    void validate() const {
        if (axis_.step_minutes <= 0 || 60 % axis_.step_minutes != 0) {
            throw DataError("step_minutes must be a positive divisor of 60, got " +
                            std::to_string(axis_.step_minutes));
        }
        if (values_.empty()) throw DataError("series must contain at least one value");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                throw DataError("non-finite value at index " + std::to_string(i));
            }
            if constexpr (std::is_same_v<Tag, DemandTag>) {
                if (values_[i] < 0.0) throw DataError("negative demand at index " + std::to_string(i));
            }
        }
    }

    TimeAxis axis_;
    std::vector<double> values_;
    std::size_t interpolated_ = 0;
};

using DemandSeries = TimeSeries<DemandTag>;
using PriceSeries = TimeSeries<PriceTag>;

// ---------------------------------------------------------------------------
// Timestamps

struct ParsedTimestamp {
    sys_seconds instant; // UTC
    std::optional<minutes> utc_offset;
};

namespace detail {

inline bool take_int(std::string_view& s, std::size_t digits, int& out) {
    if (s.size() < digits) return false;
    int value = 0;
    for (std::size_t i = 0; i < digits; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        value = value * 10 + (s[i] - '0');
    }
    out = value;
    s.remove_prefix(digits);
    return true;
}

inline bool take_char(std::string_view& s, char c) {
    if (s.empty() || s.front() != c) return false;
    s.remove_prefix(1);
    return true;
}

} // namespace detail

/// Parse `YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|+HH:MM|-HH:MM|+HHMM]`.
inline std::optional<ParsedTimestamp> parse_timestamp(std::string_view text) {
    using namespace std::chrono;
    text = io::trim(text);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (!detail::take_int(text, 4, y) || !detail::take_char(text, '-') || !detail::take_int(text, 2, mo) ||
        !detail::take_char(text, '-') || !detail::take_int(text, 2, d)) {
        return std::nullopt;
    }
    if (!detail::take_char(text, 'T') && !detail::take_char(text, ' ')) return std::nullopt;
    if (!detail::take_int(text, 2, h) || !detail::take_char(text, ':') || !detail::take_int(text, 2, mi)) {
        return std::nullopt;
    }
    if (detail::take_char(text, ':')) {
        if (!detail::take_int(text, 2, s)) return std::nullopt;
        if (detail::take_char(text, '.')) {
            while (!text.empty() && text.front() >= '0' && text.front() <= '9') text.remove_prefix(1);
        }
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;

    std::optional<minutes> offset;
    if (detail::take_char(text, 'Z')) {
        offset = minutes{0};
    } else if (!text.empty() && (text.front() == '+' || text.front() == '-')) {
        const int sign = text.front() == '-' ? -1 : 1;
        text.remove_prefix(1);
        int oh = 0, om = 0;
        if (!detail::take_int(text, 2, oh)) return std::nullopt;
        detail::take_char(text, ':');
        if (!detail::take_int(text, 2, om) || oh > 23 || om > 59) return std::nullopt;
        offset = minutes{sign * (oh * 60 + om)};
    }
    if (!text.empty()) return std::nullopt;
    const sys_seconds local = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
    return ParsedTimestamp{local - offset.value_or(minutes{0}), offset};
}

/// ISO-8601 text for a UTC instant, rendered in the given local offset.
inline std::string format_timestamp(sys_seconds instant, std::optional<minutes> offset) {
    using namespace std::chrono;
    const sys_seconds local = instant + offset.value_or(minutes{0});
    const auto day = floor<days>(local);
    const year_month_day ymd{day};
    const hh_mm_ss hms{local - day};
    char buf[40];
    int n = std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                          static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                          static_cast<int>(hms.seconds().count()));
    std::string out(buf, static_cast<std::size_t>(n));
    if (offset) {
        const long long total = offset->count();
        const long long mag = total < 0 ? -total : total;
        std::snprintf(buf, sizeof(buf), "%c%02lld:%02lld", total < 0 ? '-' : '+', mag / 60, mag % 60);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV ingest

enum class SeriesKind { Demand, Price };

struct LoadOptions {
    /// Expected sampling step. When absent it is inferred as the smallest
    /// spacing between consecutive rows.
    std::optional<int> step_minutes;
};

namespace detail {

struct RawSeries {
    TimeAxis axis;
    std::vector<double> values;
    std::size_t interpolated = 0;
};

inline RawSeries read_series_csv(const std::filesystem::path& path, const LoadOptions& options) {
    if (!std::filesystem::exists(path)) throw DataError("file not found: " + path.string());
    const std::string text = io::read_file(path);
    const std::string source = path.string();

    struct Row {
        sys_seconds instant;
        double value;
        std::size_t line;
    };
    std::vector<Row> rows;
    std::optional<minutes> offset;
    bool header_seen = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line(text.data() + pos, (eol == std::string::npos ? text.size() : eol) - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        line = io::trim(line);
        if (line.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            const auto comma = line.find(',');
            if (comma == std::string_view::npos || io::trim(line.substr(0, comma)) != "timestamp" ||
                io::trim(line.substr(comma + 1)) != "value") {
                throw ParseError(source, line_no, "expected header 'timestamp,value'");
            }
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
            throw ParseError(source, line_no, "expected two comma-separated fields");
        }
        const auto ts = parse_timestamp(line.substr(0, comma));
        if (!ts) throw ParseError(source, line_no, "malformed timestamp");
        double value = 0.0;
        if (!io::parse_double(line.substr(comma + 1), value)) {
            throw ParseError(source, line_no, "malformed value");
        }
        if (rows.empty()) {
            offset = ts->utc_offset;
        } else if (ts->utc_offset != offset) {
            throw StructuralError(source + ":" + std::to_string(line_no) + ": UTC offset changes mid-series");
        }
        rows.push_back({ts->instant, value, line_no});
    }
    if (!header_seen) throw ParseError(source, 1, "empty file");
    if (rows.empty()) throw DataError(source + ": no data rows");

    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].instant <= rows[i - 1].instant) {
            throw StructuralError(source + ":" + std::to_string(rows[i].line) +
                                  ": timestamps not strictly increasing");
        }
    }
    int step = 0;
    if (options.step_minutes) {
        step = *options.step_minutes;
    } else if (rows.size() > 1) {
        auto smallest = rows[1].instant - rows[0].instant;
        for (std::size_t i = 2; i < rows.size(); ++i) smallest = std::min(smallest, rows[i].instant - rows[i - 1].instant);
        const auto secs = smallest.count();
        if (secs % 60 != 0) throw StructuralError(source + ": spacing is not a whole number of minutes");
        step = static_cast<int>(secs / 60);
    } else {
        throw StructuralError(source + ": cannot infer step from a single row; set step_minutes");
    }
    if (step <= 0 || 60 % step != 0) {
        throw StructuralError(source + ": step of " + std::to_string(step) + " min does not divide 60");
    }

    RawSeries out;
    out.axis.start = rows.front().instant;
    out.axis.step_minutes = step;
    out.axis.utc_offset = offset;
    out.values.reserve(rows.size());
    out.values.push_back(rows.front().value);
    const long long step_seconds = step * 60LL;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const long long gap = (rows[i].instant - rows[i - 1].instant).count();
        if (gap % step_seconds != 0) {
            throw StructuralError(source + ":" + std::to_string(rows[i].line) + ": spacing of " +
                                  std::to_string(gap / 60) + " min is not a multiple of the " +
                                  std::to_string(step) + " min step");
        }
        const long long steps = gap / step_seconds;
        if (steps == 2) {
            out.values.push_back(0.5 * (rows[i - 1].value + rows[i].value));
            ++out.interpolated;
        } else if (steps > 2) {
            throw StructuralError(source + ":" + std::to_string(rows[i].line) + ": gap of " +
                                  std::to_string(steps - 1) + " missing steps");
        }
        out.values.push_back(rows[i].value);
    }
    return out;
}

} // namespace detail

template <class Tag>
TimeSeries<Tag> load_series(const std::filesystem::path& path, const LoadOptions& options = {}) {
    auto raw = detail::read_series_csv(path, options);
    try {
        return TimeSeries<Tag>(raw.axis, std::move(raw.values), raw.interpolated);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

inline DemandSeries load_demand(const std::filesystem::path& path, const LoadOptions& options = {}) {
    return load_series<DemandTag>(path, options);
}

inline PriceSeries load_prices(const std::filesystem::path& path, const LoadOptions& options = {}) {
    return load_series<PriceTag>(path, options);
}

template <class Tag>
std::string format_series_csv(const TimeSeries<Tag>& series) {
    std::string out = "timestamp,value\n";
    out.reserve(series.size() * 40);
    for (std::size_t i = 0; i < series.size(); ++i) {
        out += format_timestamp(series.axis().instant(i), series.axis().utc_offset);
        out += ',';
        out += io::format_double(series[i]);
        out += '\n';
    }
    return out;
}

template <class Tag>
void write_series(const std::filesystem::path& path, const TimeSeries<Tag>& series) {
    io::write_file_atomic(path, format_series_csv(series));
}

// ---------------------------------------------------------------------------
// Alignment

/// Trim demand and prices to their common time range on the demand grid.
/// Prices coarser than the demand step are forward-filled (an hourly price
/// holds for every 5-minute step in its hour).
inline std::pair<DemandSeries, PriceSeries> align(const DemandSeries& demand, const PriceSeries& price) {
    const auto& da = demand.axis();
    const auto& pa = price.axis();
    if (pa.step_minutes % da.step_minutes != 0) {
        throw AlignmentError("price step (" + std::to_string(pa.step_minutes) +
                             " min) must be a multiple of the demand step (" + std::to_string(da.step_minutes) +
                             " min)");
    }
    const auto price_end = pa.instant(price.size());
    std::vector<double> d;
    std::vector<double> p;
    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < demand.size(); ++i) {
        const auto t = da.instant(i);
        if (t < pa.start || t >= price_end) {
            if (first) break;
            continue;
        }
        if (!first) first = i;
        const auto index = static_cast<std::size_t>((t - pa.start).count() / (60LL * pa.step_minutes));
        d.push_back(demand[i]);
        p.push_back(price[index]);
    }
    if (!first) throw AlignmentError("demand and price series do not overlap");
    TimeAxis axis = da.shifted(*first);
    return {DemandSeries(axis, std::move(d)), PriceSeries(axis, std::move(p))};
}

// ---------------------------------------------------------------------------
// Calendar

enum class SeasonLabel { Summer, NonSummer };

inline std::string_view to_string(SeasonLabel s) { return s == SeasonLabel::Summer ? "summer" : "non-summer"; }

/// Summer is June 1 through September 30 inclusive.
inline SeasonLabel season_of(std::chrono::year_month_day date) {
    const unsigned m = static_cast<unsigned>(date.month());
    return (m >= 6 && m <= 9) ? SeasonLabel::Summer : SeasonLabel::NonSummer;
}

inline SeasonLabel season_of(sys_seconds local_time) {
    return season_of(std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(local_time)});
}

struct CalendarFeatures {
    std::vector<double> t_sin;
    std::vector<double> t_cos;
};

/// Time-of-day encoding with a daily period: sin/cos of 2*pi*h/24 where h is
/// the fractional local hour.
inline std::pair<double, double> time_of_day_features(sys_seconds local_time) {
    const auto since_midnight = local_time - std::chrono::floor<std::chrono::days>(local_time);
    const double hours = static_cast<double>(since_midnight.count()) / 3600.0;
    const double phase = 2.0 * std::numbers::pi * hours / 24.0;
    return {std::sin(phase), std::cos(phase)};
}

inline CalendarFeatures calendar_features(const TimeAxis& axis, std::size_t n) {
    CalendarFeatures f;
    f.t_sin.resize(n);
    f.t_cos.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::tie(f.t_sin[i], f.t_cos[i]) = time_of_day_features(axis.local(i));
    }
    return f;
}

template <class Tag>
CalendarFeatures calendar_features(const TimeSeries<Tag>& series) {
    return calendar_features(series.axis(), series.size());
}

/// Half-open index range [begin, end) of samples sharing a local calendar
/// month (or day).
struct CalendarBlock {
    std::chrono::year_month_day first_day;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

namespace detail {

template <class KeyFn>
std::vector<CalendarBlock> blocks(const TimeAxis& axis, std::size_t n, KeyFn key) {
    std::vector<CalendarBlock> out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(axis.local(i))};
        if (out.empty() || key(out.back().first_day) != key(ymd)) {
            out.push_back({ymd, i, i + 1});
        } else {
            out.back().end = i + 1;
        }
    }
    return out;
}

} // namespace detail

inline std::vector<CalendarBlock> month_blocks(const TimeAxis& axis, std::size_t n) {
    return detail::blocks(axis, n, [](const std::chrono::year_month_day& d) {
        return std::pair{static_cast<int>(d.year()), static_cast<unsigned>(d.month())};
    });
}

inline std::vector<CalendarBlock> day_blocks(const TimeAxis& axis, std::size_t n) {
    return detail::blocks(axis, n, [](const std::chrono::year_month_day& d) { return std::chrono::sys_days{d}; });
}

} // namespace bess
