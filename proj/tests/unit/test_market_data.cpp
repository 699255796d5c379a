#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "volinfo/errors.hpp"
#include "volinfo/market_data.hpp"

using namespace volinfo;
using namespace std::chrono;

TEST_CASE("date parsing accepts ISO and US slash formats") {
    DateFormat f;
    CHECK(parse_date("2008-09-15", &f) == year_month_day{year(2008), month(9), day(15)});
    CHECK(f == DateFormat::Iso);
    CHECK(parse_date("9/15/2008", &f) == year_month_day{year(2008), month(9), day(15)});
    CHECK(f == DateFormat::UsSlash);
    CHECK(parse_date("2008-09-15 00:00:00") == year_month_day{year(2008), month(9), day(15)});
    CHECK(format_date(parse_date("01/02/2006")) == "2006-01-02");
    CHECK_THROWS_AS(parse_date("2008-02-30"), ParseError);
    CHECK_THROWS_AS(parse_date("15.09.2008"), ParseError);
    CHECK_THROWS_AS(parse_date("9/15/08"), ParseError);
    CHECK_THROWS_AS(parse_date(""), ParseError);
}

TEST_CASE("csv with quotes, missing prices and extra columns") {
    const std::string csv =
        "Date,Open,\"Adj Close\",Volume\r\n"
        "2006-01-03,1,\"100.0\",\"1,000\"\r\n"
        "2006-01-04,1,null,5\r\n"
        "2006-01-05,1,0,5\r\n"
        "2006-01-06,1,,5\r\n"
        "\n"
        "2006-01-09,1,101.5,5\r\n";
    LoadReport rep;
    PriceSeries s = parse_prices(csv, {}, &rep);
    REQUIRE(s.size() == 2);
    CHECK(s.prices[0] == 100.0);
    CHECK(s.prices[1] == 101.5);
    CHECK(rep.rows_read == 5);
    CHECK(rep.rows_dropped == 3);
    CHECK_FALSE(rep.reordered);
    CHECK(rep.date_format == "YYYY-MM-DD");
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("custom column selectors") {
    const std::string csv = "day,close\n01/03/2006,10\n01/04/2006,11\n";
    ColumnSelectors cols{"day", "close"};
    LoadReport rep;
    PriceSeries s = parse_prices(csv, cols, &rep);
    CHECK(s.size() == 2);
    CHECK(rep.date_format == "MM/DD/YYYY");
    CHECK_THROWS_AS(parse_prices(csv), ParseError);
}

TEST_CASE("descending input is reordered with a warning") {
    const std::string csv = "Date,Adj Close\n2006-01-05,3\n2006-01-04,2\n2006-01-03,1\n";
    LoadReport rep;
    PriceSeries s = parse_prices(csv, {}, &rep);
    CHECK(rep.reordered);
    CHECK_FALSE(rep.warnings.empty());
    CHECK(s.prices == std::vector<double>{1, 2, 3});
    CHECK(format_date(s.dates.front()) == "2006-01-03");
}

TEST_CASE("malformed input") {
    CHECK_THROWS_AS(parse_prices(""), ParseError);
    CHECK_THROWS_AS(parse_prices("Date,Adj Close\n"), EmptySeries);
    CHECK_THROWS_AS(parse_prices("Date,Adj Close\n2006-01-03,0\n2006-01-04,null\n"), EmptySeries);
    CHECK_THROWS_AS(parse_prices("Date,Adj Close\n2006-01-03,1\n2006-01-03,2\n"), ParseError);
    CHECK_THROWS_AS(parse_prices("Date,Adj Close\n2006-01-03\n"), ParseError);
    CHECK_THROWS_AS(parse_prices("Date,Adj Close\n\"2006-01-03,1\n"), ParseError);
    CHECK_THROWS_AS(parse_prices("Date,Adj Close\n2006-01-03,1\n01/04/2006,2\n"), ParseError);
    CHECK_THROWS_AS(load_prices("/nonexistent/prices.csv"), ParseError);
}

TEST_CASE("returns round trip to prices") {
    PriceSeries s;
    const double p[] = {100.0, 101.3, 99.7, 99.7, 105.2, 80.1, 80.11};
    sys_days d = sys_days{year(2006) / 1 / 3};
    for (double v : p) {
        s.dates.push_back(d);
        s.prices.push_back(v);
        d += days(1);
    }
    ReturnsSeries r = to_returns(s);
    REQUIRE(r.size() == s.size() - 1);
    CHECK(r.days.front() == 0.0);
    CHECK(r.days.back() == static_cast<double>(r.size() - 1));
    CHECK(r.returns[2] == 0.0);
    std::vector<double> back = reconstruct_prices(s.prices.front(), r.returns);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(std::abs(back[i] - s.prices[i]) / s.prices[i] < 1e-12);

    PriceSeries one;
    one.dates = {s.dates[0]};
    one.prices = {1.0};
    CHECK_THROWS_AS(to_returns(one), EmptySeries);
}

TEST_CASE("load from file and manifest") {
    const auto path = std::filesystem::temp_directory_path() / "volinfo_test_prices.csv";
    {
        std::ofstream out(path);
        out << "Date,Open,High,Low,Close,Adj Close,Volume\n"
               "2006-01-03,1,1,1,1,1248.29,1\n"
               "2006-01-04,1,1,1,1,1268.80,1\n"
               "2006-01-05,1,1,1,1,null,1\n"
               "2006-01-06,1,1,1,1,1285.45,1\n";
    }
    LoadReport rep;
    PriceSeries s = load_prices(path, {}, &rep);
    Json m = price_manifest(path, s, rep);
    CHECK(m["sha256"].get<std::string>().size() == 64);
    CHECK(m["first_date"] == "2006-01-03");
    CHECK(m["last_date"] == "2006-01-06");
    CHECK(m["rows_used"] == 3);
    CHECK(m["rows_dropped"] == 1);
    std::filesystem::remove(path);
}
