#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bair/dump_io.hpp"
#include "bair/error.hpp"

using namespace bair;
namespace fs = std::filesystem;

namespace {

std::vector<BottleneckVector> grid(std::uint64_t seed, int layers, int heads, std::size_t n,
                                   double scale = 3.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<BottleneckVector> out;
  for (int l = 0; l < layers; ++l)
    for (int h = 0; h < heads; ++h) {
      BottleneckVector v;
      v.layer = l;
      v.head = h;
      v.sample_id = "case-7";
      v.layout = {n, {1, n / 3}, {1 + n / 3, n - 1 - n / 3}, Span{n / 2, n / 4}};
      v.logits.resize(n);
      for (auto& x : v.logits) x = d(rng);
      out.push_back(v);
    }
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected bair::Error");
  return ErrorCode::kIo;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "bair_dump_io_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("dump round trip is exact at float32") {
  auto vecs = grid(1, 3, 4, 57);
  vecs[0].logits[0] = 1e-40;  // subnormal
  vecs[0].logits[1] = -3.4e38;
  for (auto enc : {Encoding::kInline, Encoding::kBinary}) {
    auto back = parse_dump(serialize_dump(vecs, enc));
    REQUIRE(back.size() == vecs.size());
    for (std::size_t k = 0; k < vecs.size(); ++k) {
      CHECK(back[k].layer == vecs[k].layer);
      CHECK(back[k].head == vecs[k].head);
      CHECK(back[k].layout == vecs[k].layout);
      CHECK(back[k].sample_id == "case-7");
      for (std::size_t i = 0; i < vecs[k].logits.size(); ++i)
        CHECK(back[k].logits[i] == static_cast<double>(static_cast<float>(vecs[k].logits[i])));
    }
    CHECK(serialize_dump(back, enc) == serialize_dump(vecs, enc));
  }
  auto a = parse_dump(serialize_dump(vecs, Encoding::kInline));
  auto b = parse_dump(serialize_dump(vecs, Encoding::kBinary));
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].logits == b[k].logits);
}

TEST_CASE("dump header layout") {
  auto text = serialize_dump(grid(2, 1, 2, 6), Encoding::kInline);
  CHECK(text.starts_with("bair-dump/1\n{\"context_span\":[3,1],\"encoding\":\"inline\""));
  CHECK(text.find("\"value_count\":12") != std::string::npos);
}

TEST_CASE("write_dump is byte-deterministic and read_dump reads it back") {
  auto vecs = grid(3, 2, 2, 40);
  auto p1 = scratch("a.bdump"), p2 = scratch("b.bdump");
  write_dump(vecs, p1, Encoding::kBinary);
  write_dump(vecs, p2, Encoding::kBinary);
  CHECK(read_text_file(p1) == read_text_file(p2));
  CHECK(read_dump(p1).size() == 4);
  CHECK(code_of([] { read_dump("/nonexistent/dir/x.bdump"); }) == ErrorCode::kIo);
}

TEST_CASE("empty inventory") {
  auto text = serialize_dump(std::vector<BottleneckVector>{}, Encoding::kBinary);
  CHECK(text.starts_with("bair-dump/1\n"));
  CHECK(parse_dump(text).empty());
}

TEST_CASE("dump error codes") {
  auto vecs = grid(4, 2, 2, 20);
  auto bin = serialize_dump(vecs, Encoding::kBinary);

  SUBCASE("truncated binary payload") {
    auto cut = bin.substr(0, bin.size() - 6);
    try {
      parse_dump(cut);
      FAIL("expected length mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kLengthMismatch);
      std::string msg = e.what();
      CHECK(msg.find("length mismatch") != std::string::npos);
      CHECK(msg.find("expected 80") != std::string::npos);
      CHECK(msg.find("found 314 bytes") != std::string::npos);
    }
  }
  SUBCASE("version") {
    auto v2 = "bair-dump/2" + bin.substr(11);
    CHECK(code_of([&] { parse_dump(v2); }) == ErrorCode::kVersionMismatch);
    CHECK(code_of([&] { parse_dump("hello\n{}\n"); }) == ErrorCode::kParse);
  }
  SUBCASE("span overlap") {
    auto pos = bin.find("\"visual_span\":[1,6]");
    REQUIRE(pos != std::string::npos);
    auto bad = bin;
    bad.replace(pos, 19, "\"visual_span\":[1,9]");
    CHECK(code_of([&] { parse_dump(bad); }) == ErrorCode::kSpanOverlap);
  }
  SUBCASE("non-finite value") {
    auto bad = bin;
    float nan = std::nanf("");
    std::memcpy(bad.data() + bad.size() - 4, &nan, 4);
    CHECK(code_of([&] { parse_dump(bad); }) == ErrorCode::kNonFinite);
    auto text = serialize_dump(vecs, Encoding::kInline);
    auto sp = text.rfind(' ');
    text.replace(sp + 1, text.size() - sp - 2, "nan");
    CHECK(code_of([&] { parse_dump(text); }) == ErrorCode::kNonFinite);
  }
  SUBCASE("bad manifest") {
    CHECK(code_of([] { parse_dump("bair-dump/1\n{not json\n"); }) == ErrorCode::kParse);
  }
  SUBCASE("writer rejects a ragged inventory") {
    vecs.pop_back();
    CHECK(code_of([&] { serialize_dump(vecs, Encoding::kBinary); }) ==
          ErrorCode::kLayoutMismatch);
  }
}

TEST_CASE("targets round trip") {
  CalibrationTargets t;
  t.source_id = "ref-1";
  t.entries[{0, 1}] = {0.123456789012345678, 0.5, 64, false};
  t.entries[{2, 0}] = {1e-6, 0.0, 3, true};
  auto back = parse_targets(serialize_targets(t));
  CHECK(back.source_id == "ref-1");
  REQUIRE(back.entries.size() == 2);
  CHECK(back.at({0, 1}).m_target == t.at({0, 1}).m_target);
  CHECK(back.at({2, 0}).mass_clamped);
  CHECK(back.at({2, 0}).n_visual == 3);
  CHECK_THROWS_AS(parse_targets("bair-targets/9\n"), Error);
}

TEST_CASE("scores round trip and parsing") {
  std::vector<EvalRecord> recs{
      {"a", 1.0, 0.25, 0.75, std::string("line1\nline2\twith tab \\ slash")},
      {"b", 0.0, std::nullopt, 0.5, std::nullopt},
  };
  auto back = parse_scores(serialize_scores(recs));
  REQUIRE(back.size() == 2);
  CHECK(back[0].response_text == recs[0].response_text);
  CHECK(back[0].score_rag == 0.25);
  CHECK_FALSE(back[1].score_rag.has_value());
  CHECK_FALSE(back[1].response_text.has_value());

  auto minimal = parse_scores("S_B\tsample_id\n0.5\tx\n1\ty\n");
  REQUIRE(minimal.size() == 2);
  CHECK(minimal[1].sample_id == "y");
  CHECK_FALSE(minimal[0].score_intervention.has_value());

  CHECK_THROWS_AS(parse_scores("sample_id\tS_R\nx\t1\n"), Error);
  CHECK_THROWS_AS(parse_scores("sample_id\tS_B\nx\t1.5\n"), Error);
  CHECK_THROWS_AS(parse_scores("sample_id\tS_B\nx\tabc\n"), Error);
  CHECK_THROWS_AS(parse_scores("sample_id\tS_B\nx\t1\t2\n"), Error);

  CHECK(unescape_field(escape_field("a\\b\tc\nd\re")) == "a\\b\tc\nd\re");
}

TEST_CASE("segment samples file") {
  auto s = parse_segment_samples("sample_id\tevidence\tdocument\tscore\nq1\tfoo\tbar foo baz\t1\n");
  REQUIRE(s.size() == 1);
  CHECK(s[0].evidence == "foo");
  CHECK(s[0].score == 1.0);
}
