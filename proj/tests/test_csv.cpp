#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "driftlab/csv.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/serialize.hpp"

using namespace driftlab;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("doubles round-trip exactly through shortest formatting", "[csv]") {
  Rng r(17);
  for (int i = 0; i < 1000; ++i) {
    const double v = (r.uniform01() - 0.5) * std::pow(10.0, r.uniform(-12, 12));
    const std::string s = format_double(v);
    REQUIRE(parse_double(s) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5) == "-2.5");
}

TEST_CASE("integer parsing rejects trailing junk", "[csv]") {
  CHECK(parse_int("42") == 42);
  CHECK_THROWS_AS(parse_int("42x"), Error);
  CHECK_THROWS_AS(parse_int(""), Error);
  CHECK_THROWS_AS(parse_double("1.5.2"), Error);
}

TEST_CASE("csv writer and reader round-trip quoted fields", "[csv]") {
  const std::string path = temp_path("driftlab_test_roundtrip.csv");
  {
    CsvWriter w(path);
    w.write_row({"a", "b"});
    w.write_row({"plain", "with,comma"});
    w.write_row({"quote\"inside", "line\nbreak"});
    w.close();
  }
  std::vector<std::vector<std::string>> rows;
  read_csv(path, {"a", "b"}, [&](std::size_t, const std::vector<std::string>& f) {
    rows.push_back(f);
  });
  REQUIRE(rows.size() == 2u);
  CHECK(rows[0] == std::vector<std::string>{"plain", "with,comma"});
  CHECK(rows[1] == std::vector<std::string>{"quote\"inside", "line\nbreak"});
  std::filesystem::remove(path);
}

TEST_CASE("csv reader validates the header", "[csv]") {
  const std::string path = temp_path("driftlab_test_header.csv");
  write_text_file(path, "x,y\n1,2\n");
  CHECK_THROWS_WITH(
      read_csv(path, {"a", "b"}, [](std::size_t, const std::vector<std::string>&) {}),
      Catch::Matchers::ContainsSubstring("expected header"));
  std::filesystem::remove(path);
}

TEST_CASE("csv reader reports the line of a malformed row", "[csv]") {
  const std::string path = temp_path("driftlab_test_badrow.csv");
  write_text_file(path, "a,b\n1,2\n3\n");
  try {
    read_csv(path, {"a", "b"}, [](std::size_t, const std::vector<std::string>&) {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("empty csv file is rejected", "[csv]") {
  const std::string path = temp_path("driftlab_test_empty.csv");
  write_text_file(path, "");
  CHECK_THROWS_AS(read_csv(path, {"a"}, [](std::size_t, const std::vector<std::string>&) {}),
                  Error);
  std::filesystem::remove(path);
}

TEST_CASE("missing file raises an io error", "[csv]") {
  try {
    read_csv("/nonexistent/driftlab.csv", {"a"},
             [](std::size_t, const std::vector<std::string>&) {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
