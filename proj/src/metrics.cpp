#include "bair/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "bair/error.hpp"

namespace bair {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kBaseline: return "baseline";
    case Method::kRag: return "rag";
    case Method::kIntervention: return "intervention";
  }
  return "unknown";
}

namespace {

void check_score(double s, const std::string& sample_id) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "sample " + sample_id + ": score outside [0, 1]");
  }
}

Rate make_rate(double numerator, std::size_t denominator) {
  Rate r;
  r.numerator = numerator;
  r.denominator = denominator;
  r.defined = denominator > 0;
  r.value = r.defined ? numerator / static_cast<double>(denominator) : 0.0;
  return r;
}

Method response_owner(const EvalRecord& r) {
  if (r.score_intervention) return Method::kIntervention;
  if (r.score_rag) return Method::kRag;
  return Method::kBaseline;
}

}  // namespace

void validate_records(std::span<const EvalRecord> records) {
  for (const auto& r : records) {
    check_score(r.score_baseline, r.sample_id);
    if (r.score_rag) check_score(*r.score_rag, r.sample_id);
    if (r.score_intervention) check_score(*r.score_intervention, r.sample_id);
  }
}

double score_of(const EvalRecord& record, Method method) {
  switch (method) {
    case Method::kBaseline:
      return record.score_baseline;
    case Method::kRag:
      if (!record.score_rag) {
        throw Error(ErrorCode::kInvalidArgument,
                    "sample " + record.sample_id + ": missing RAG score");
      }
      return *record.score_rag;
    case Method::kIntervention:
      if (!record.score_intervention) {
        throw Error(ErrorCode::kInvalidArgument,
                    "sample " + record.sample_id + ": missing intervention score");
      }
      return *record.score_intervention;
  }
  return 0.0;
}

double accuracy(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyInput, "accuracy: no scores");
  for (double s : scores) check_score(s, "<accuracy>");
  return std::accumulate(scores.begin(), scores.end(), 0.0) /
         static_cast<double>(scores.size());
}

double accuracy(std::span<const EvalRecord> records, Method method) {
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const auto& r : records) scores.push_back(score_of(r, method));
  return accuracy(scores);
}

Rate correction_rate(std::span<const EvalRecord> records, Method method) {
  double num = 0.0;
  std::size_t den = 0;
  for (const auto& r : records) {
    const double b = r.score_baseline;
    num += std::max(0.0, score_of(r, method) - b);
    den += b < 1.0 ? 1 : 0;
  }
  return make_rate(num, den);
}

Rate degradation_rate(std::span<const EvalRecord> records, Method method) {
  double num = 0.0;
  std::size_t den = 0;
  for (const auto& r : records) {
    const double b = r.score_baseline;
    num += std::max(0.0, b - score_of(r, method));
    den += b > 0.0 ? 1 : 0;
  }
  return make_rate(num, den);
}

Rate recovery_rate(std::span<const EvalRecord> records) {
  double num = 0.0;
  std::size_t den = 0;
  for (const auto& r : records) {
    const double rag = score_of(r, Method::kRag);
    num += std::max(0.0, score_of(r, Method::kIntervention) - rag);
    den += rag < 1.0 ? 1 : 0;
  }
  return make_rate(num, den);
}

Rate strictly_cured_rate(std::span<const EvalRecord> records) {
  double num = 0.0;
  std::size_t den = 0;
  for (const auto& r : records) {
    const double b = r.score_baseline;
    const double rag = score_of(r, Method::kRag);
    const double in = score_of(r, Method::kIntervention);
    if (b > rag) {
      ++den;
      if (in >= b) num += in - rag;
    }
  }
  return make_rate(num, den);
}

Rate novel_recovery_rate(std::span<const EvalRecord> records) {
  double num = 0.0;
  std::size_t den = 0;
  for (const auto& r : records) {
    const double b = r.score_baseline;
    const double rag = score_of(r, Method::kRag);
    num += std::max(0.0, score_of(r, Method::kIntervention) - std::max(b, rag));
    den += (b < 1.0 && rag < 1.0) ? 1 : 0;
  }
  return make_rate(num, den);
}

RateRatio cr_dr_ratio(const Rate& cr, const Rate& dr) {
  if (dr.value > 0.0) return {cr.value / dr.value, RateRatio::Kind::kFinite};
  if (cr.value > 0.0) return {0.0, RateRatio::Kind::kInfinite};
  return {0.0, RateRatio::Kind::kUndefined};
}

bool generation_failure(std::string_view text) {
  const auto is_space = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
  };
  const auto first = std::find_if_not(text.begin(), text.end(), is_space);
  const auto last = std::find_if_not(text.rbegin(), text.rend(), is_space).base();
  if (first >= last) return true;
  if (static_cast<std::size_t>(last - first) < kMinResponseChars) return true;

  std::string_view previous;
  std::size_t run = 0;
  auto it = first;
  while (it != last) {
    it = std::find_if_not(it, last, is_space);
    const auto end = std::find_if(it, last, is_space);
    const std::string_view token(&*it, static_cast<std::size_t>(end - it));
    run = (token == previous) ? run + 1 : 1;
    if (run >= kMaxTokenRepeats) return true;
    previous = token;
    it = end;
  }
  return false;
}

std::optional<double> gfr(std::span<const EvalRecord> records) {
  std::size_t with_text = 0, failed = 0;
  for (const auto& r : records) {
    if (!r.response_text) continue;
    ++with_text;
    failed += generation_failure(*r.response_text) ? 1 : 0;
  }
  if (with_text == 0) return std::nullopt;
  return static_cast<double>(failed) / static_cast<double>(with_text);
}

std::vector<EvalRecord> apply_failure_zeroing(std::span<const EvalRecord> records) {
  std::vector<EvalRecord> out(records.begin(), records.end());
  for (auto& r : out) {
    if (!r.response_text || !generation_failure(*r.response_text)) continue;
    switch (response_owner(r)) {
      case Method::kIntervention: r.score_intervention = 0.0; break;
      case Method::kRag: r.score_rag = 0.0; break;
      case Method::kBaseline: r.score_baseline = 0.0; break;
    }
  }
  return out;
}

TransitionTable transition_table(std::span<const EvalRecord> records,
                                 Method method, double threshold) {
  TransitionTable t;
  for (const auto& r : records) {
    const bool before = r.score_baseline >= threshold;
    const bool after = score_of(r, method) >= threshold;
    if (before && after) ++t.correct_to_correct;
    else if (before) ++t.correct_to_incorrect;
    else if (after) ++t.incorrect_to_correct;
    else ++t.incorrect_to_incorrect;
  }
  return t;
}

namespace {

MethodMetrics method_metrics(std::span<const EvalRecord> records, Method method,
                             double threshold) {
  MethodMetrics m;
  m.method = method;
  m.accuracy = accuracy(records, method);
  m.cr = correction_rate(records, method);
  m.dr = degradation_rate(records, method);
  m.cr_dr_ratio = cr_dr_ratio(m.cr, m.dr);
  m.transitions = transition_table(records, method, threshold);
  return m;
}

}  // namespace

MetricsReport evaluate(std::span<const EvalRecord> input, double threshold) {
  validate_records(input);
  if (input.empty()) throw Error(ErrorCode::kEmptyInput, "evaluate: no records");
  const std::vector<EvalRecord> records = apply_failure_zeroing(input);

  MetricsReport report;
  report.samples = records.size();
  report.threshold = threshold;
  report.baseline_accuracy = accuracy(records, Method::kBaseline);

  const bool all_rag = std::all_of(records.begin(), records.end(),
                                   [](const auto& r) { return r.score_rag.has_value(); });
  const bool all_int = std::all_of(records.begin(), records.end(), [](const auto& r) {
    return r.score_intervention.has_value();
  });
  if (all_rag) report.rag = method_metrics(records, Method::kRag, threshold);
  if (all_int) {
    report.intervention = method_metrics(records, Method::kIntervention, threshold);
  }
  if (all_rag && all_int) {
    report.rr = recovery_rate(records);
    report.sr = strictly_cured_rate(records);
    report.nr = novel_recovery_rate(records);
  }
  report.gfr = gfr(records);
  for (const auto& r : records) {
    if (r.response_text && generation_failure(*r.response_text)) {
      ++report.failed_generations;
    }
  }
  return report;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

}  // namespace bair
