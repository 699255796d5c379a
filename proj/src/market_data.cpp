#include "volinfo/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "volinfo/errors.hpp"

namespace volinfo {

namespace {

std::string_view strip(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t lineno) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back(strip(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted) throw ParseError("line " + std::to_string(lineno) + ": unterminated quote");
    out.emplace_back(strip(field));
    return out;
}

bool parse_int(std::string_view s, int& v) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
}

// Finite positive price, or false for missing / zero / non-numeric cells.
bool parse_price(std::string_view s, double& v) {
    s = strip(s);
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return false;
    return std::isfinite(v) && v > 0.0;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    std::string have;
    for (const std::string& h : header) have += (have.empty() ? "" : ", ") + h;
    throw ParseError("column '" + name + "' not found (header: " + have + ")");
}

}  // namespace

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

Date parse_date(std::string_view text, DateFormat* detected) {
    const std::string_view s = strip(text);
    int y = 0, m = 0, d = 0;
    bool ok = false;
    DateFormat f = DateFormat::Iso;
    if (s.size() >= 10 && s[4] == '-' && s[7] == '-') {
        ok = parse_int(s.substr(0, 4), y) && parse_int(s.substr(5, 2), m) && parse_int(s.substr(8, 2), d) &&
             (s.size() == 10 || s[10] == 'T' || s[10] == ' ');
    } else {
        const auto a = s.find('/'), b = s.rfind('/');
        if (a != std::string_view::npos && b != a) {
            f = DateFormat::UsSlash;
            ok = parse_int(s.substr(0, a), m) && parse_int(s.substr(a + 1, b - a - 1), d) &&
                 parse_int(s.substr(b + 1), y) && s.size() - b - 1 == 4;
        }
    }
    const Date date{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(m)),
                    std::chrono::day(static_cast<unsigned>(d))};
    if (!ok || m < 1 || d < 1 || !date.ok()) throw ParseError("unrecognised date '" + std::string(s) + "'");
    if (detected != nullptr) *detected = f;
    return date;
}

void PriceSeries::validate() const {
    if (prices.empty()) throw EmptySeries("price series is empty");
    if (dates.size() != prices.size()) throw DomainError("price series: dates and prices differ in length");
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i])) throw DomainError("price series: prices must be positive");
        if (i > 0 && !(dates[i - 1] < dates[i])) throw DomainError("price series: dates must be strictly ascending");
    }
}

PriceSeries parse_prices(std::string_view csv, const ColumnSelectors& cols, LoadReport* report) {
    LoadReport rep;
    std::istringstream in{std::string(csv)};
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        header = split_csv_line(line, lineno);
        if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
    }
    if (header.empty()) throw ParseError("CSV has no header row");
    const std::size_t di = find_column(header, cols.date), pi = find_column(header, cols.price);

    std::vector<std::pair<Date, double>> rows;
    bool have_format = false;
    DateFormat format = DateFormat::Iso;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        ++rep.rows_read;
        const std::vector<std::string> f = split_csv_line(line, lineno);
        if (f.size() <= std::max(di, pi))
            throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                             " fields, found " + std::to_string(f.size()));
        DateFormat this_format;
        Date date;
        try {
            date = parse_date(f[di], &this_format);
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!have_format) {
            format = this_format;
            have_format = true;
        } else if (this_format != format) {
            throw ParseError("line " + std::to_string(lineno) + ": date format differs from earlier rows");
        }
        double price = 0.0;
        if (!parse_price(f[pi], price)) {
            ++rep.rows_dropped;
            continue;
        }
        rows.emplace_back(date, price);
    }
    rep.date_format = format == DateFormat::Iso ? "YYYY-MM-DD" : "MM/DD/YYYY";
    if (rows.empty()) throw EmptySeries("no usable price rows");

    const bool ascending = std::is_sorted(rows.begin(), rows.end(),
                                          [](const auto& a, const auto& b) { return a.first < b.first; });
    if (!ascending) {
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        rep.reordered = true;
        rep.warnings.push_back("rows were not in ascending date order and have been sorted");
        std::clog << "warning: price rows reordered to ascending dates\n";
    }
    PriceSeries s;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].first == rows[i - 1].first)
            throw ParseError("duplicate date " + format_date(rows[i].first));
        s.dates.push_back(rows[i].first);
        s.prices.push_back(rows[i].second);
    }
    if (rep.rows_dropped > 0)
        rep.warnings.push_back(std::to_string(rep.rows_dropped) + " rows with missing or zero prices dropped");
    if (report != nullptr) *report = rep;
    return s;
}

PriceSeries load_prices(const std::filesystem::path& path, const ColumnSelectors& cols, LoadReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_prices(ss.str(), cols, report);
}

ReturnsSeries to_returns(const PriceSeries& s, const CalendarConvention& cal) {
    if (s.size() < 2) throw EmptySeries("to_returns: need at least two prices");
    s.validate();
    ReturnsSeries r;
    r.calendar = cal;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        r.days.push_back(static_cast<double>(i));
        r.returns.push_back((s.prices[i + 1] - s.prices[i]) / s.prices[i]);
    }
    return r;
}

std::vector<double> reconstruct_prices(double s0, const std::vector<double>& returns) {
    std::vector<double> p{s0};
    for (double r : returns) p.push_back(p.back() * (1.0 + r));
    return p;
}

Json price_manifest(const std::filesystem::path& path, const PriceSeries& s, const LoadReport& report,
                    const ColumnSelectors& cols) {
    Json j;
    j["file"] = path.filename().string();
    j["sha256"] = sha256_file(path);
    j["date_column"] = cols.date;
    j["price_column"] = cols.price;
    j["date_format"] = report.date_format;
    j["first_date"] = s.dates.empty() ? "" : format_date(s.dates.front());
    j["last_date"] = s.dates.empty() ? "" : format_date(s.dates.back());
    j["rows_read"] = report.rows_read;
    j["rows_dropped"] = report.rows_dropped;
    j["rows_used"] = s.size();
    j["reordered"] = report.reordered;
    j["warnings"] = report.warnings;
    return j;
}

}  // namespace volinfo
