#include <gtest/gtest.h>

#include <cmath>

#include "incidentlab/common.hpp"
#include "incidentlab/keyvalue.hpp"
#include "test_support.hpp"

using namespace incidentlab;

TEST(Rng, SameSeedSameStream) {
  Rng a(9), b(9), c(10);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    differs = differs || x != c.uniform();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, PoissonMoments) {
  Rng r(3);
  for (double mean : {0.2, 4.0, 55.0}) {
    const int n = 20000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(r.poisson(mean));
      s += x;
      s2 += x * x;
    }
    const double m = s / n, var = s2 / n - m * m;
    EXPECT_NEAR(m, mean, 4.0 * std::sqrt(mean / n));
    EXPECT_NEAR(var, mean, 0.1 * mean);
  }
  EXPECT_EQ(r.poisson(0.0), 0);
}

TEST(Rng, WeightedIndexSkipsZeroWeights) {
  Rng r(1);
  std::vector<int> hits(3, 0);
  for (int i = 0; i < 3000; ++i) ++hits[r.weighted_index({1.0, 0.0, 3.0})];
  EXPECT_EQ(hits[1], 0);
  EXPECT_NEAR(hits[2] / 3000.0, 0.75, 0.04);
  EXPECT_THROW(r.weighted_index({0.0, 0.0}), PreconditionError);
}

TEST(Text, SplitKeepsEmptyFields) {
  EXPECT_EQ(split("a,,b,", ','), (std::vector<std::string>{"a", "", "b", ""}));
  EXPECT_EQ(trim("  x y \t"), "x y");
  EXPECT_EQ(join({"a", "b"}, ";"), "a;b");
}

TEST(Text, ParseNumbers) {
  EXPECT_DOUBLE_EQ(parse_double(" 2.5 ", "v"), 2.5);
  EXPECT_EQ(parse_int("-7", "v"), -7);
  EXPECT_THROW(parse_double("2.5x", "v"), ParseError);
  EXPECT_THROW(parse_int("1.5", "v"), ParseError);
  EXPECT_TRUE(parse_bool("yes", "v"));
  EXPECT_FALSE(parse_bool("0", "v"));
  EXPECT_THROW(parse_bool("maybe", "v"), ParseError);
}

TEST(Text, FormatDoubleRoundTrips) {
  Rng r(5);
  for (int i = 0; i < 200; ++i) {
    const double v = r.normal(0.0, 1e3) * std::pow(10.0, static_cast<int>(r.uniform_index(12)) - 6);
    EXPECT_EQ(parse_double(format_double(v), "v"), v);
  }
  EXPECT_EQ(format_double(3.0), "3");
}

TEST(KeyValue, ParseAndRoundTrip) {
  auto doc = KeyValueDoc::parse("# comment\na = 1\n b=two words \n\nc = 2.5\n");
  EXPECT_EQ(doc.get("b"), "two words");
  EXPECT_EQ(doc.get_int_or("a", 0), 1);
  EXPECT_DOUBLE_EQ(doc.get_double("c"), 2.5);
  EXPECT_EQ(doc.get_or("missing", "x"), "x");
  EXPECT_THROW(doc.get("missing"), Error);
  doc.set("a", 3.25);
  const auto again = KeyValueDoc::parse(doc.str());
  EXPECT_EQ(again.entries(), doc.entries());
  EXPECT_THROW(KeyValueDoc::parse("no equals sign\n"), ParseError);
}

TEST(Io, WriteCreatesParents) {
  const auto dir = testsupport::temp_dir("io");
  write_text(dir + "/a/b/c.txt", "x\ny\n");
  EXPECT_EQ(read_lines(dir + "/a/b/c.txt"), (std::vector<std::string>{"x", "y"}));
  EXPECT_THROW(read_lines(dir + "/missing.txt"), IoError);
}

TEST(KeyValue, StringLiteralValuesStayStrings) {
  KeyValueDoc d;
  d.set("format", "raw-placement/1");
  d.set("flag", true);
  EXPECT_EQ(d.get("format"), "raw-placement/1");
  EXPECT_EQ(d.get("flag"), "true");
}
