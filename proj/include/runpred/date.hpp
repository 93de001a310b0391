#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace runpred {

// Calendar date. Proleptic Gregorian, no time-of-day.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;
};

// Days since 1970-01-01 (civil-calendar arithmetic, valid far outside the
// 32-bit time_t range).
std::int64_t to_days(const Date& d);

Date date_from_days(std::int64_t days);

// Whole years elapsed between `birth` and `at` (age in years).
int years_between(const Date& birth, const Date& at);

// Parses "YYYY-MM-DD". Returns nullopt for empty or malformed input.
std::optional<Date> parse_date(const std::string& text);

std::string format_date(const Date& d);

}  // namespace runpred
