#pragma once

#include <compare>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fxarb {

// Calendar date (no time component).
struct Date {
    int year = 0;
    int month = 0;  // 1..12
    int day = 0;    // 1..31

    auto operator<=>(const Date&) const = default;

    // 0 = Sunday .. 6 = Saturday
    int weekday() const;
    bool is_weekend() const { int w = weekday(); return w == 0 || w == 6; }
    Date next_day() const;

    std::string iso() const;
    static Date parse_iso(const std::string& s);  // throws std::invalid_argument
};

int days_between(const Date& a, const Date& b);  // b - a in calendar days

// Ordered weekday trading calendar with a 1-based trading-date index.
class TradingCalendar {
public:
    TradingCalendar() = default;

    // All weekdays in [first, last], inclusive.
    static TradingCalendar weekdays_between(const Date& first, const Date& last);
    // n_days weekdays starting at the first weekday >= first.
    static TradingCalendar weekdays_from(const Date& first, int n_days);

    int size() const { return static_cast<int>(dates_.size()); }
    bool empty() const { return dates_.empty(); }

    // 1-based index access.
    const Date& date(int t) const;
    // Index of an exact calendar date; nullopt if not a trading date.
    std::optional<int> index_of(const Date& d) const;
    // First trading date with calendar date >= d; nullopt if past the end.
    std::optional<int> first_on_or_after(const Date& d) const;

    int first_index() const { return 1; }
    int last_index() const { return size(); }

    const std::vector<Date>& dates() const { return dates_; }

private:
    void rebuild_index();

    std::vector<Date> dates_;
    std::map<Date, int> index_;
};

}  // namespace fxarb
