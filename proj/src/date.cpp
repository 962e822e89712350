#include "mmhedge/date.hpp"

#include <charconv>
#include <cstdio>

#include "mmhedge/errors.hpp"

namespace mmhedge {

using namespace std::chrono;

Date::Date(int y, unsigned m, unsigned d) {
    year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw DataError("invalid calendar date");
    days_ = sys_days{ymd};
}

Date Date::parse(std::string_view text) {
    auto field = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        auto first = text.data() + pos;
        auto [ptr, ec] = std::from_chars(first, first + len, v);
        if (ec != std::errc{} || ptr != first + len)
            throw DataError("malformed date '" + std::string(text) + "'");
        return v;
    };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw DataError("malformed date '" + std::string(text) + "'");
    return Date(field(0, 4), static_cast<unsigned>(field(5, 2)), static_cast<unsigned>(field(8, 2)));
}

std::string Date::str() const {
    year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

bool Date::is_weekend() const {
    weekday w{days_};
    return w == Saturday || w == Sunday;
}

Date Date::next_business_day() const {
    Date d{days_ + std::chrono::days{1}};
    while (d.is_weekend()) d = Date{d.days_ + std::chrono::days{1}};
    return d;
}

}  // namespace mmhedge
