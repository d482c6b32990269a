#include "loadcast/binary_io.hpp"
#include "loadcast/calendar.hpp"
#include "loadcast/csv.hpp"
#include "loadcast/error.hpp"
#include "loadcast/random.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace loadcast;

TEST(Calendar, TimestampFormats) {
	const auto a = parse_timestamp("2019-06-16 07:00");
	EXPECT_EQ(a, parse_timestamp("2019-06-16T07:00"));
	EXPECT_EQ(a, parse_timestamp("2019-06-16 07:00:00"));
	EXPECT_EQ(hour_of_day(a), 7);
	EXPECT_EQ(format_timestamp(a), "2019-06-16 07:00");
	EXPECT_THROW(parse_timestamp("2019-06-16 07:30"), DataError);
	EXPECT_THROW(parse_timestamp("yesterday"), DataError);
}

TEST(Calendar, Weekdays) {
	EXPECT_EQ(weekday_index(parse_date("2024-12-23")), 0); // Monday
	EXPECT_EQ(weekday_index(parse_date("2024-12-22")), 6); // Sunday
	EXPECT_EQ(date_of(make_hour(parse_date("2020-02-29"), 23) + 1), parse_date("2020-03-01"));
}

TEST(Csv, NumbersRoundTrip) {
	Rng rng(1);
	for (int k = 0; k < 1000; ++k) {
		const double x = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
		EXPECT_EQ(*csv::parse_number(csv::number(x)).value, x);
	}
	EXPECT_FALSE(csv::parse_number("NA").value.has_value());
	EXPECT_TRUE(csv::parse_number("NA").ok);
	EXPECT_FALSE(csv::parse_number("x1").ok);
}

TEST(Csv, ParseSkipsCommentsAndBlankLines) {
	const auto t = csv::parse("a,b\n# note\n\n1, 2\n3,4\n", "inline");
	EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
	ASSERT_EQ(t.rows.size(), 2u);
	EXPECT_EQ(t.rows[0].cells[1], "2");
	EXPECT_EQ(t.rows[1].line, 5u);
	EXPECT_THROW(t.column("c"), SchemaError);
}

TEST(Csv, WriterRows) {
	csv::Writer w({"x", "y"});
	w.cell(1.5).cell(std::optional<double>{});
	w.end_row();
	EXPECT_EQ(w.str(), "x,y\n1.5,NA\n");
}

TEST(BinaryIo, RoundTrip) {
	test_support::TempDir dir("bin");
	io::ByteWriter out;
	out.magic("TEST0001");
	out.u64(42);
	out.f64(-0.125);
	out.string("hello");
	out.save(dir.path() / "x.bin");
	auto in = io::ByteReader::open(dir.path() / "x.bin");
	in.expect_magic("TEST0001");
	EXPECT_EQ(in.u64(), 42u);
	EXPECT_EQ(in.f64(), -0.125);
	EXPECT_EQ(in.string(), "hello");
	EXPECT_TRUE(in.at_end());
	EXPECT_THROW(in.u8(), FormatError);
}

TEST(Random, DerivedSeedsDiffer) {
	EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
	EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
	EXPECT_EQ(derive_seed(9, "cell"), derive_seed(9, "cell"));
	Rng a(5), b(5);
	for (int k = 0; k < 100; ++k) {
		EXPECT_EQ(a.normal(), b.normal());
		EXPECT_LT(a.below(7), 7u);
		b.below(7);
	}
}
