#include "ttf/error.hpp"
#include "ttf/ltv.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ttf;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::internal;
}

LtvDataset parse(const std::string& body) {
    std::istringstream in(std::string(kDatasetCsvHeader) + "\n" + body);
    return parse_dataset(in);
}

} // namespace

TEST(Date, RoundTripAndCalendar) {
    EXPECT_EQ(parse_date("1970-01-01").value, 0);
    EXPECT_EQ(parse_date("2000-03-01") - parse_date("2000-02-28"), 2); // leap year
    EXPECT_EQ(parse_date("2023-03-01") - parse_date("2023-02-28"), 1);
    EXPECT_EQ(format_date(parse_date("2024-12-31")), "2024-12-31");
    EXPECT_EQ(day_of_week(parse_date("2024-01-07")), 0u); // a Sunday
    EXPECT_EQ(day_of_year(parse_date("2024-12-31")), 366u);
    EXPECT_EQ(days_in_month(parse_date("2023-02-10")), 28u);
    for (int v = -1000; v < 30000; v += 37) EXPECT_EQ(parse_date(format_date(Day{v})).value, v);
}

TEST(Date, RejectsMalformed) {
    EXPECT_EQ(code_of([] { parse_date("2023-02-30"); }), ErrorCode::parse_error);
    EXPECT_EQ(code_of([] { parse_date("2023-2-3"); }), ErrorCode::parse_error);
    EXPECT_EQ(code_of([] { parse_date("garbage"); }), ErrorCode::parse_error);
}

TEST(LtvN, CumulativeSums) {
    LtvCurve c{ChannelId{"a"}, Day{0}, {1.0, 2.0, 3.5}, 5};
    EXPECT_DOUBLE_EQ(ltv_n(c, 0), 0.0);
    EXPECT_DOUBLE_EQ(ltv_n(c, 2), 3.0);
    EXPECT_DOUBLE_EQ(ltv_n(c, 3), 6.5);
    EXPECT_EQ(code_of([&] { ltv_n(c, 4); }), ErrorCode::insufficient_history);
    EXPECT_EQ(slice_curve(c, 1, 3), (std::vector<double>{2.0, 3.5}));
    EXPECT_EQ(code_of([&] { slice_curve(c, 2, 5); }), ErrorCode::out_of_range);
}

TEST(LtvCsv, ParsesAndRoundTrips) {
    const std::string body = "b,2023-01-02,0,1.5,7\n"
                             "a,2023-01-01,1,0.25,3\n"
                             "a,2023-01-01,0,1,3\n"
                             "b,2023-01-02,1,0.1,7\n";
    const LtvDataset ds = parse(body);
    EXPECT_EQ(ds.curve_count(), 2u);
    const LtvCurve* a = ds.find(ChannelId{"a"}, parse_date("2023-01-01"));
    ASSERT_NE(a, nullptr);
    EXPECT_EQ(a->values, (std::vector<double>{1.0, 0.25}));
    EXPECT_EQ(a->user_count, 3);

    std::ostringstream out;
    write_dataset(ds, out);
    std::istringstream again(out.str());
    const LtvDataset ds2 = parse_dataset(again);
    std::ostringstream out2;
    write_dataset(ds2, out2);
    EXPECT_EQ(out.str(), out2.str());
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), kDatasetCsvHeader);
}

TEST(LtvCsv, Errors) {
    EXPECT_EQ(code_of([] { parse("a,2023-01-01,0,1,3\na,2023-01-01,0,2,3\n"); }), ErrorCode::duplicate_observation);
    EXPECT_EQ(code_of([] { parse("a,2023-01-01,0,1,3\na,2023-01-01,2,2,3\n"); }), ErrorCode::retention_gap);
    EXPECT_EQ(code_of([] { parse("a,2023-01-01,1,1,3\n"); }), ErrorCode::retention_gap);
    EXPECT_EQ(code_of([] { parse("a,2023-01-01,0,abc,3\n"); }), ErrorCode::parse_error);
    EXPECT_EQ(code_of([] { parse("a,2023-01-01,0,1\n"); }), ErrorCode::parse_error);
    EXPECT_NE(code_of([] { parse("a,2023-01-01,0,-1,3\n"); }), ErrorCode::internal);
    EXPECT_NE(code_of([] { parse("a,2023-01-01,0,1,3\na,2023-01-01,1,1,4\n"); }), ErrorCode::internal);
    std::istringstream bad_header("x,y\n");
    EXPECT_EQ(code_of([&] { parse_dataset(bad_header); }), ErrorCode::parse_error);
}

TEST(LtvDataset, RejectsDuplicateCurves) {
    std::vector<LtvCurve> curves{{ChannelId{"a"}, Day{1}, {1.0}, 1}, {ChannelId{"a"}, Day{1}, {2.0}, 1}};
    EXPECT_EQ(code_of([&] { LtvDataset ds(curves); }), ErrorCode::duplicate_observation);
}

TEST(Holidays, ParseSkipsComments) {
    std::istringstream in("# fixed\n2023-01-01\n\n2023-12-25  \n");
    const HolidayCalendar cal = parse_holidays(in);
    EXPECT_EQ(cal.dates().size(), 2u);
    EXPECT_TRUE(cal.contains(parse_date("2023-12-25")));
    std::ostringstream out;
    write_holidays(cal, out);
    std::istringstream back(out.str());
    EXPECT_EQ(parse_holidays(back).dates(), cal.dates());
}

TEST(FormatReal, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, 0.0})
        EXPECT_EQ(std::stod(format_real(v)), v);
    EXPECT_EQ(format_real(0.5), "0.5");
}
