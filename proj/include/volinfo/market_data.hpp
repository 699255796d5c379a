#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "volinfo/artifact_io.hpp"
#include "volinfo/gp_stochvol.hpp"

namespace volinfo {

using Date = std::chrono::year_month_day;

enum class DateFormat { Iso, UsSlash };

std::string format_date(const Date& d);

// Parses YYYY-MM-DD or MM/DD/YYYY; ParseError otherwise.
Date parse_date(std::string_view text, DateFormat* detected = nullptr);

struct PriceSeries {
    std::vector<Date> dates; // strictly ascending
    std::vector<double> prices; // adjusted close, positive

    void validate() const;
    std::size_t size() const { return prices.size(); }
};

struct ColumnSelectors {
    std::string date = "Date";
    std::string price = "Adj Close";
};

struct LoadReport {
    std::size_t rows_read = 0;    // data rows in the file
    std::size_t rows_dropped = 0; // missing, zero or non-numeric prices
    bool reordered = false;       // input was not in ascending date order
    std::string date_format;
    std::vector<std::string> warnings;
};

// CSV with a header row; quoted fields allowed. Rows with missing or zero prices
// are dropped and counted; the result is sorted ascending by date.
PriceSeries parse_prices(std::string_view csv, const ColumnSelectors& cols = {}, LoadReport* report = nullptr);
PriceSeries load_prices(const std::filesystem::path& path, const ColumnSelectors& cols = {},
                        LoadReport* report = nullptr);

// r_t = (S_{t+1} - S_t) / S_t on consecutive trading-day indices 0, 1, ...
ReturnsSeries to_returns(const PriceSeries& s, const CalendarConvention& cal = {});

// S_0 followed by S_0 * prod (1 + r).
std::vector<double> reconstruct_prices(double s0, const std::vector<double>& returns);

// File hash, date range and row counts for a loaded price file.
Json price_manifest(const std::filesystem::path& path, const PriceSeries& s, const LoadReport& report,
                    const ColumnSelectors& cols = {});

}  // namespace volinfo
