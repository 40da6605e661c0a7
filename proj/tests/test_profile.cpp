#include <doctest.h>

#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "bair/error.hpp"
#include "bair/profile.hpp"
#include "oracles.hpp"

using namespace bair;

TEST_CASE("tokenize") {
  CHECK(tokenize("The  lungs, are CLEAR.") == Tokens{"the", "lungs", "are", "clear"});
  CHECK(tokenize("  ").empty());
  CHECK(tokenize("(a) -- b's") == Tokens{"a", "b's"});
}

TEST_CASE("rouge_l examples") {
  Tokens abc{"a", "b", "c"};
  CHECK(rouge_l(abc, abc) == 1.0);
  CHECK(rouge_l(abc, Tokens{"x", "y"}) == 0.0);
  CHECK(rouge_l(Tokens{}, abc) == 0.0);
  CHECK(rouge_l(abc, Tokens{}) == 0.0);

  Tokens cand{"a", "b", "c", "d"}, ref{"a", "c", "e"};
  CHECK(lcs_length(cand, ref) == 2);
  double p = 0.5, r = 2.0 / 3.0;
  CHECK(rouge_l(cand, ref) == doctest::Approx(2 * p * r / (p + r)).epsilon(1e-15));
  CHECK(rouge_l(cand, ref) == doctest::Approx(0.5714).epsilon(1e-4));
}

TEST_CASE("property: rouge_l equals DP oracle") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    auto a = oracle::random_tokens(rng, 30, 2 + trial % 12);
    auto b = oracle::random_tokens(rng, 30, 2 + trial % 12);
    CHECK(lcs_length(a, b) == oracle::lcs(a, b));
    double got = rouge_l(a, b);
    CHECK(got == oracle::rouge_l(a, b));
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
    if (!a.empty()) CHECK(rouge_l(a, a) == 1.0);
  }
}

TEST_CASE("bin_sizes") {
  CHECK(bin_sizes(10, 3) == std::vector<std::size_t>{4, 3, 3});
  CHECK(bin_sizes(12, 4) == std::vector<std::size_t>{3, 3, 3, 3});
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t k = 2 + trial % 30, len = k + rng() % 500;
    auto s = bin_sizes(len, k);
    CHECK(std::accumulate(s.begin(), s.end(), std::size_t{0}) == len);
    CHECK(s.front() - s.back() <= 1);
  }
}

TEST_CASE("positional_profile") {
  Tokens doc;
  for (int i = 0; i < 25; ++i) doc.push_back("t" + std::to_string(i));
  Tokens response(doc.begin() + 10, doc.begin() + 15);
  auto prof = positional_profile(response, doc, 5, "rag");
  REQUIRE(prof.values.size() == 5);
  CHECK(prof.values[2] == 1.0);
  for (int k : {0, 1, 3, 4}) CHECK(prof.values[k] == 0.0);
  CHECK(prof.method_label == "rag");
  CHECK(prof.bin_edges.front() == 0.0);
  CHECK(prof.bin_edges.back() == 1.0);
  for (std::size_t k = 1; k < prof.bin_edges.size(); ++k)
    CHECK(prof.bin_edges[k] > prof.bin_edges[k - 1]);

  auto empty = positional_profile(Tokens{}, doc, 5);
  for (double v : empty.values) CHECK(v == 0.0);

  Tokens small{"x", "y", "z"};
  auto per_token = positional_profile(Tokens{"y"}, small, 3);
  CHECK(per_token.values == std::vector<double>{0, 1, 0});

  CHECK_THROWS_AS(positional_profile(response, Tokens{}, 5), Error);
  CHECK_THROWS_AS(positional_profile(response, small, 4), Error);
  CHECK_THROWS_AS(positional_profile(response, small, 1), Error);
}

TEST_CASE("classify_segment") {
  std::string doc(100, '.');
  doc.replace(45, 8, "Effusion");
  auto mid = classify_segment("effusion", doc);
  REQUIRE(mid.segment.has_value());
  CHECK(*mid.segment == 3);
  CHECK(mid.match_positions == std::vector<int>{3});

  std::string twice(100, '.');
  twice.replace(2, 3, "abc");
  twice.replace(90, 3, "ABC");
  auto both = classify_segment("abc", twice);
  CHECK_FALSE(both.segment.has_value());
  CHECK(both.match_positions == std::vector<int>{1, 5});

  auto none = classify_segment("zzz", doc);
  CHECK_FALSE(none.segment.has_value());
  CHECK(none.match_positions.empty());

  std::string straddle(100, '.');
  straddle.replace(38, 4, "edge");
  CHECK(classify_segment("edge", straddle).match_positions == std::vector<int>{2, 3});
}

TEST_CASE("segment_accuracy") {
  std::vector<SegmentSample> samples;
  auto put = [&](int seg, double score) {
    SegmentSample s;
    s.assignment.segment = seg;
    s.assignment.match_positions = {seg};
    s.score = score;
    samples.push_back(s);
  };
  for (int i = 0; i < 10; ++i) put(1, 1.0);
  put(2, 0.4);
  std::mt19937_64 rng(5);
  std::bernoulli_distribution hi(0.9), lo(0.3);
  for (int i = 0; i < 400; ++i) {
    put(5, hi(rng) ? 1.0 : 0.0);
    put(4, lo(rng) ? 1.0 : 0.0);
  }
  samples.push_back(SegmentSample{});

  BootstrapOptions opt;
  opt.seed = 99;
  auto rows = segment_accuracy(samples, opt);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].mean == 1.0);
  CHECK(rows[0].ci_low == 1.0);
  CHECK(rows[0].ci_high == 1.0);
  CHECK(rows[1].samples == 1);
  CHECK(rows[1].ci_low == 0.4);
  CHECK(rows[1].ci_high == 0.4);
  CHECK(rows[2].empty());
  CHECK(rows[4].mean == doctest::Approx(0.9).epsilon(0.05));
  CHECK(rows[3].mean == doctest::Approx(0.3).epsilon(0.2));
  CHECK(rows[4].ci_low <= rows[4].mean);
  CHECK(rows[4].ci_high >= rows[4].mean);
  CHECK(rows[4].ci_high - rows[4].ci_low > 0.0);

  auto again = segment_accuracy(samples, opt);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(again[k].ci_low == rows[k].ci_low);
    CHECK(again[k].ci_high == rows[k].ci_high);
  }
}
