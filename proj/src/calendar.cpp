#include "fxarb/calendar.hpp"

#include <algorithm>
#include <cstdio>

namespace fxarb {

namespace {

bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || (y % 400 == 0);
}

int days_in_month(int y, int m) {
    static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return d[m - 1];
}

// Days since 0000-03-01 (civil-from-days style), valid for all Gregorian dates.
long long day_number(const Date& dt) {
    int y = dt.year;
    int m = dt.month;
    int d = dt.day;
    y -= m <= 2;
    long long era = (y >= 0 ? y : y - 399) / 400;
    int yoe = static_cast<int>(y - era * 400);
    int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe;
}

}  // namespace

int Date::weekday() const {
    // day_number(1970-01-01) falls on a Thursday.
    long long n = day_number(*this);
    return static_cast<int>(((n + 3) % 7 + 7) % 7);
}

Date Date::next_day() const {
    Date d = *this;
    if (++d.day > days_in_month(d.year, d.month)) {
        d.day = 1;
        if (++d.month > 12) {
            d.month = 1;
            ++d.year;
        }
    }
    return d;
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

Date Date::parse_iso(const std::string& s) {
    Date d;
    char extra;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &d.year, &d.month, &d.day, &extra) != 3 ||
        s.size() != 10) {
        throw std::invalid_argument("not an ISO-8601 date: '" + s + "'");
    }
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) {
        throw std::invalid_argument("invalid calendar date: '" + s + "'");
    }
    return d;
}

int days_between(const Date& a, const Date& b) {
    return static_cast<int>(day_number(b) - day_number(a));
}

TradingCalendar TradingCalendar::weekdays_between(const Date& first, const Date& last) {
    if (last < first) throw std::invalid_argument("calendar range end precedes start");
    TradingCalendar cal;
    for (Date d = first; d <= last; d = d.next_day()) {
        if (!d.is_weekend()) cal.dates_.push_back(d);
    }
    cal.rebuild_index();
    return cal;
}

TradingCalendar TradingCalendar::weekdays_from(const Date& first, int n_days) {
    if (n_days < 0) throw std::invalid_argument("negative calendar length");
    TradingCalendar cal;
    cal.dates_.reserve(static_cast<size_t>(n_days));
    Date d = first;
    while (static_cast<int>(cal.dates_.size()) < n_days) {
        if (!d.is_weekend()) cal.dates_.push_back(d);
        d = d.next_day();
    }
    cal.rebuild_index();
    return cal;
}

const Date& TradingCalendar::date(int t) const {
    if (t < 1 || t > size()) throw std::out_of_range("trading-date index out of range");
    return dates_[static_cast<size_t>(t - 1)];
}

std::optional<int> TradingCalendar::index_of(const Date& d) const {
    auto it = index_.find(d);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<int> TradingCalendar::first_on_or_after(const Date& d) const {
    auto it = index_.lower_bound(d);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void TradingCalendar::rebuild_index() {
    index_.clear();
    for (size_t i = 0; i < dates_.size(); ++i) {
        index_[dates_[i]] = static_cast<int>(i) + 1;
    }
}

}  // namespace fxarb
