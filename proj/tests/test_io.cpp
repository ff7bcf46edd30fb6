#include <gtest/gtest.h>

#include <string>

#include "gtfs2vec/calendar_date.hpp"
#include "gtfs2vec/detail/csv.hpp"
#include "gtfs2vec/detail/digest.hpp"
#include "gtfs2vec/detail/io.hpp"
#include "gtfs2vec/detail/zip.hpp"
#include "support/temp_dir.hpp"

using namespace gtfs2vec;
using testing_support::temp_dir;

TEST(Csv, QuotedFieldsCrlfAndBom) {
  std::string const text =
      "\xEF\xBB\xBF" "a, b ,c\r\n1,\"x, \"\"y\"\"\",3\r\n\r\n4,5\r\n";
  detail::csv_reader r{text, "t.txt"};
  ASSERT_EQ(r.header().size(), 3u);
  EXPECT_EQ(r.required_column("a"), 0u);
  EXPECT_EQ(r.required_column("b"), 1u);
  detail::csv_row row;
  ASSERT_TRUE(r.next(row));
  EXPECT_EQ(row.fields[1], "x, \"y\"");
  EXPECT_EQ(row.line, 2u);
  ASSERT_TRUE(r.next(row));
  EXPECT_EQ(row.fields[0], "4");
  EXPECT_EQ(row.fields[2], "");  // short rows are padded
  EXPECT_FALSE(r.next(row));
}

TEST(Csv, TooManyFieldsIsMalformed) {
  std::string const text = "a,b\n1,2,3\n";
  detail::csv_reader r{text, "t.txt"};
  detail::csv_row row;
  try {
    r.next(row);
    FAIL() << "expected malformed_row";
  } catch (malformed_row const& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.table(), "t.txt");
  }
}

TEST(Csv, MissingRequiredColumn) {
  std::string const text = "a,b\n";
  detail::csv_reader r{text, "t.txt"};
  EXPECT_THROW(r.required_column("c"), malformed_row);
}

TEST(Csv, WriterQuotesWhenNeeded) {
  std::string out;
  detail::append_csv_row(out, {"plain", "with,comma", "q\"uote"});
  EXPECT_EQ(out, "plain,\"with,comma\",\"q\"\"uote\"\n");
  std::string const text = "h1,h2,h3\n" + out;
  detail::csv_reader r{text, "t"};
  detail::csv_row row;
  ASSERT_TRUE(r.next(row));
  EXPECT_EQ(row.fields[1], "with,comma");
  EXPECT_EQ(row.fields[2], "q\"uote");
}

TEST(Numbers, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 51.1079, -1e-300, 123456789.125}) {
    double back{};
    ASSERT_TRUE(detail::parse_number(detail::format_double(v), back));
    EXPECT_EQ(back, v);
  }
  int i{};
  EXPECT_TRUE(detail::parse_number(" +7 ", i));
  EXPECT_EQ(i, 7);
  EXPECT_FALSE(detail::parse_number("7x", i));
  EXPECT_FALSE(detail::parse_number("", i));
}

TEST(Digest, KnownSha256) {
  EXPECT_EQ(detail::sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(detail::sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Zip, WriteThenReadStoredAndDeflated) {
  temp_dir dir{"zip"};
  std::string big(100000, 'x');
  for (std::size_t i = 0; i < big.size(); i += 7) {
    big[i] = static_cast<char>('a' + i % 26);
  }
  detail::zip_writer w;
  w.add("stops.txt", "stop_id\nA\n", false);
  w.add("nested/trips.txt", big, true);
  w.add("empty.txt", "", true);
  w.write_to(dir / "feed.zip");

  detail::zip_reader r{dir / "feed.zip"};
  EXPECT_EQ(r.entries().size(), 3u);
  EXPECT_EQ(r.read("stops.txt"), "stop_id\nA\n");
  EXPECT_EQ(r.read("nested/trips.txt"), big);
  EXPECT_EQ(r.read("trips.txt"), big);  // unique basename match
  EXPECT_EQ(r.read("empty.txt"), "");
  EXPECT_FALSE(r.read("calendar.txt").has_value());
}

TEST(Zip, OutputIsDeterministic) {
  detail::zip_writer a, b;
  a.add("x.txt", "hello");
  b.add("x.txt", "hello");
  EXPECT_EQ(a.finish(), b.finish());
}

TEST(Zip, CorruptArchiveIsRejected) {
  temp_dir dir{"zipbad"};
  detail::write_file(dir / "bad.zip", "this is not a zip archive at all");
  EXPECT_THROW(detail::zip_reader{dir / "bad.zip"}, error);

  detail::zip_writer w;
  w.add("a.txt", std::string(1000, 'q'), false);
  auto bytes = w.finish();
  bytes[40] ^= 0x01;  // inside the stored payload
  detail::write_file(dir / "crc.zip", bytes);
  detail::zip_reader r{dir / "crc.zip"};
  EXPECT_THROW(r.read("a.txt"), error);
}

TEST(Dates, ParseFormatAndWeekday) {
  auto const d = parse_gtfs_date("20240103");
  EXPECT_EQ(format_iso_date(d), "2024-01-03");
  EXPECT_EQ(format_gtfs_date(parse_iso_date("2024-02-29")), "20240229");
  EXPECT_EQ(weekday_index(d), 2u);  // Wednesday
  EXPECT_EQ(format_iso_date(add_days(d, 30)), "2024-02-02");
  EXPECT_THROW(parse_gtfs_date("20230229"), format_error);
  EXPECT_THROW(parse_iso_date("2024-1-3"), format_error);
}
