#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "bair/error.hpp"
#include "bair/metrics.hpp"
#include "oracles.hpp"

using namespace bair;

namespace {

EvalRecord rec(double b, std::optional<double> r = {}, std::optional<double> i = {},
               std::optional<std::string> text = {}) {
  return {"s", b, r, i, std::move(text)};
}

std::vector<EvalRecord> from_bm(const std::vector<double>& b, const std::vector<double>& m) {
  std::vector<EvalRecord> out;
  for (std::size_t k = 0; k < b.size(); ++k) out.push_back(rec(b[k], m[k]));
  return out;
}

std::vector<EvalRecord> to_records(const std::vector<oracle::Row>& rows) {
  std::vector<EvalRecord> out;
  for (const auto& r : rows) out.push_back(rec(r.b, r.r, r.i, r.text));
  return out;
}

void check_rate(const Rate& got, const oracle::Ratio& want) {
  CHECK(got.defined == want.defined);
  CHECK(got.denominator == want.den);
  CHECK(std::abs(got.value - want.value) <= 1e-12);
}

}  // namespace

TEST_CASE("accuracy") {
  CHECK(accuracy(std::vector<double>{1, 1, 0, 0}) == 0.5);
  CHECK(accuracy(std::vector<double>{1, 1, 1}) == 1.0);
  CHECK_THROWS_AS(accuracy(std::vector<double>{}), Error);
  CHECK(format_percent(0.6376) == "63.76");
  CHECK(format_percent(0.6831) == "68.31");
  CHECK(format_percent(1.0) == "100.00");
}

TEST_CASE("correction and degradation rates") {
  auto same = correction_rate(from_bm({1, 1}, {1, 1}), Method::kRag);
  CHECK_FALSE(same.defined);
  CHECK(same.value == 0.0);
  CHECK(same.denominator == 0);

  auto cr = correction_rate(from_bm({0, 0.5, 1}, {1, 0.25, 1}), Method::kRag);
  CHECK(cr.defined);
  CHECK(cr.value == 0.5);
  CHECK(cr.denominator == 2);

  CHECK(correction_rate(from_bm({0, 0, 0, 0, 0}, {1, 1, 1, 1, 1}), Method::kRag).value == 1.0);

  CHECK(degradation_rate(from_bm({0.5, 1, 0}, {0.5, 1, 0}), Method::kRag).value == 0.0);
  auto dr = degradation_rate(from_bm({1, 0.5, 0}, {0, 0.5, 0}), Method::kRag);
  CHECK(dr.value == 0.5);
  CHECK(dr.denominator == 2);
  CHECK(degradation_rate(from_bm({1, 1}, {0, 0}), Method::kRag).value == 1.0);
}

TEST_CASE("cr_dr_ratio kinds") {
  Rate cr{0.4, 2, 5, true}, dr{0.2, 1, 5, true}, zero{0.0, 0, 5, true};
  auto r = cr_dr_ratio(cr, dr);
  CHECK(r.kind == RateRatio::Kind::kFinite);
  CHECK(r.value == 2.0);
  CHECK(cr_dr_ratio(cr, zero).kind == RateRatio::Kind::kInfinite);
  CHECK(cr_dr_ratio(zero, zero).kind == RateRatio::Kind::kUndefined);
  CHECK(cr_dr_ratio(zero, dr).value == 0.0);
}

TEST_CASE("recovery, strictly cured and novel recovery rates") {
  std::vector<EvalRecord> same{rec(0, 0.5, 0.5), rec(1, 0.25, 0.25)};
  CHECK(recovery_rate(same).value == 0.0);
  CHECK(recovery_rate(std::vector<EvalRecord>{rec(0, 0, 0.6), rec(0, 1, 1)}).value ==
        doctest::Approx(0.6).epsilon(1e-15));
  CHECK_FALSE(recovery_rate(std::vector<EvalRecord>{rec(0, 1, 1), rec(1, 1, 0)}).defined);
  CHECK_THROWS_AS(recovery_rate(std::vector<EvalRecord>{rec(0, 1)}), Error);

  CHECK_FALSE(strictly_cured_rate(std::vector<EvalRecord>{rec(0, 1, 1)}).defined);
  CHECK(strictly_cured_rate(std::vector<EvalRecord>{rec(1, 0, 1)}).value == 1.0);
  CHECK(strictly_cured_rate(std::vector<EvalRecord>{rec(1, 0, 1), rec(1, 0, 0.5)}).value == 0.5);

  CHECK(novel_recovery_rate(std::vector<EvalRecord>{rec(0.5, 0.25, 0.5)}).value == 0.0);
  CHECK(novel_recovery_rate(std::vector<EvalRecord>{rec(0.2, 0.4, 0.9)}).value ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK_FALSE(novel_recovery_rate(std::vector<EvalRecord>{rec(1, 0, 1), rec(1, 1, 0)}).defined);
}

TEST_CASE("generation_failure") {
  CHECK(generation_failure(""));
  CHECK(generation_failure("   "));
  CHECK(generation_failure("ok"));
  CHECK(generation_failure(" abcd \n"));
  CHECK_FALSE(generation_failure("clear lungs"));
  CHECK(generation_failure("no no no no no finding"));
  CHECK_FALSE(generation_failure("no no no no finding"));
  CHECK_FALSE(generation_failure("No no no no no"));
  CHECK(generation_failure("see\tsee  see\nsee see"));
}

TEST_CASE("gfr and failure zeroing") {
  std::vector<EvalRecord> ok{rec(1, 1, 1, "clear lungs"), rec(0, 0, 1, "small effusion")};
  CHECK(gfr(ok).value() == 0.0);
  CHECK_FALSE(gfr(std::vector<EvalRecord>{rec(1)}).has_value());

  std::vector<EvalRecord> four{rec(1, 1, 1, "clear lungs"), rec(1, 1, 1, "ok"),
                               rec(1, 1, 1, "normal heart"), rec(1, 1, 1, "no acute issue")};
  CHECK(gfr(four).value() == 0.25);

  auto zeroed = apply_failure_zeroing(four);
  CHECK(zeroed[1].score_intervention == 0.0);
  CHECK(zeroed[1].score_rag == 1.0);
  CHECK(accuracy(zeroed, Method::kIntervention) == 0.75);
  auto report = evaluate(four);
  CHECK(report.intervention->accuracy == 0.75);
  CHECK(report.failed_generations == 1);

  std::vector<EvalRecord> base_only{rec(1, {}, {}, "ok"), rec(1, {}, {}, "fine answer")};
  CHECK(evaluate(base_only).baseline_accuracy == 0.5);
}

TEST_CASE("transition_table") {
  auto t = transition_table(from_bm({1, 0}, {0, 1}), Method::kRag, 0.5);
  CHECK(t.correct_to_incorrect == 1);
  CHECK(t.incorrect_to_correct == 1);
  CHECK(t.correct_to_correct == 0);
  CHECK(t.incorrect_to_incorrect == 0);

  auto strict = transition_table(from_bm({0.99, 1, 0.5}, {1, 1, 0.75}), Method::kRag, 1.0);
  CHECK(strict.incorrect_to_correct == 1);
  CHECK(strict.correct_to_correct == 1);
  CHECK(strict.incorrect_to_incorrect == 1);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> th(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    auto rows = oracle::random_rows(rng, false);
    std::vector<double> b, m;
    for (auto& r : rows) {
      b.push_back(r.b);
      m.push_back(*r.r);
    }
    double threshold = trial % 2 ? th(rng) : 0.25 * (trial % 5);
    auto got = transition_table(from_bm(b, m), Method::kRag, threshold);
    auto want = oracle::transitions(b, m, threshold);
    CHECK(got.correct_to_correct == want[1][1]);
    CHECK(got.correct_to_incorrect == want[1][0]);
    CHECK(got.incorrect_to_correct == want[0][1]);
    CHECK(got.incorrect_to_incorrect == want[0][0]);
    CHECK(got.total() == rows.size());
  }
}

TEST_CASE("validation of scores") {
  CHECK_THROWS_AS(validate_records(std::vector<EvalRecord>{rec(1.5)}), Error);
  CHECK_THROWS_AS(validate_records(std::vector<EvalRecord>{rec(0.5, -0.1)}), Error);
  CHECK_THROWS_AS(evaluate(std::vector<EvalRecord>{rec(0.5, {}, std::nan(""))}), Error);
  CHECK_THROWS_AS(evaluate(std::vector<EvalRecord>{}), Error);
  CHECK_THROWS_AS(correction_rate(std::vector<EvalRecord>{rec(0.5)}, Method::kRag), Error);
}

TEST_CASE("property: evaluate matches brute-force oracle") {
  std::mt19937_64 rng(4242);
  int undefined_seen = 0;
  for (int trial = 0; trial < 600; ++trial) {
    auto rows = oracle::random_rows(rng, trial % 3 != 0);
    if (trial % 10 == 1)
      for (auto& r : rows) r.b = 1.0;
    if (trial % 10 == 2)
      for (auto& r : rows) r.r = 1.0;
    auto report = evaluate(to_records(rows), 0.5);
    auto z = oracle::zeroed(rows);
    std::vector<double> b, r, i;
    for (auto& row : z) {
      b.push_back(row.b);
      r.push_back(*row.r);
      i.push_back(*row.i);
    }
    CHECK(std::abs(report.baseline_accuracy - oracle::acc(b)) <= 1e-12);
    REQUIRE(report.rag);
    REQUIRE(report.intervention);
    CHECK(std::abs(report.rag->accuracy - oracle::acc(r)) <= 1e-12);
    CHECK(std::abs(report.intervention->accuracy - oracle::acc(i)) <= 1e-12);
    check_rate(report.rag->cr, oracle::cr(b, r));
    check_rate(report.rag->dr, oracle::dr(b, r));
    check_rate(report.intervention->cr, oracle::cr(b, i));
    check_rate(report.intervention->dr, oracle::dr(b, i));
    check_rate(*report.rr, oracle::rr(r, i));
    check_rate(*report.sr, oracle::sr(b, r, i));
    check_rate(*report.nr, oracle::nr(b, r, i));
    undefined_seen += !report.rag->cr.defined + !report.sr->defined + !report.nr->defined;

    std::size_t with_text = 0, fails = 0;
    for (auto& row : rows)
      if (row.text) {
        ++with_text;
        fails += oracle::failed(*row.text);
      }
    if (with_text == 0) {
      CHECK_FALSE(report.gfr.has_value());
    } else {
      REQUIRE(report.gfr.has_value());
      CHECK(std::abs(*report.gfr - double(fails) / double(with_text)) <= 1e-12);
    }

    for (const auto* m : {&*report.rag, &*report.intervention})
      for (const Rate* rate : {&m->cr, &m->dr})
        if (rate->defined) CHECK((rate->value >= 0.0 && rate->value <= 1.0));

    // CR and DR both vanish iff the method agrees with baseline where it counts.
    bool agree = true;
    for (std::size_t k = 0; k < b.size(); ++k)
      if ((b[k] < 1.0 || b[k] > 0.0) && r[k] != b[k]) agree = false;
    CHECK(agree == (report.rag->cr.value == 0.0 && report.rag->dr.value == 0.0));
  }
  CHECK(undefined_seen > 50);
}
