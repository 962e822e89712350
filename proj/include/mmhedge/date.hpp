#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace mmhedge {

// Calendar date with ISO-8601 (YYYY-MM-DD) text form.
class Date {
public:
    Date() = default;
    explicit Date(std::chrono::sys_days days) : days_(days) {}
    Date(int y, unsigned m, unsigned d);

    static Date parse(std::string_view text);
    std::string str() const;

    std::chrono::sys_days days() const { return days_; }
    bool is_weekend() const;
    Date next_business_day() const;

    auto operator<=>(const Date&) const = default;

private:
    std::chrono::sys_days days_{};
};

}  // namespace mmhedge
