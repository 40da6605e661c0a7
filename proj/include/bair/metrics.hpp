#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bair {

// One evaluated sample. Scores are continuous in [0, 1]: baseline (no
// retrieval), standard RAG and intervention. `response_text` is the output of
// the last method present on the record, and a failed generation zeroes that
// method's score.
struct EvalRecord {
  std::string sample_id;
  double score_baseline = 0.0;
  std::optional<double> score_rag;
  std::optional<double> score_intervention;
  std::optional<std::string> response_text;
};

enum class Method { kBaseline, kRag, kIntervention };

std::string_view to_string(Method method);

// A ratio metric. When the population is empty the value is 0 and
// `defined` is false.
struct Rate {
  double value = 0.0;
  double numerator = 0.0;
  std::size_t denominator = 0;
  bool defined = false;
};

struct RateRatio {
  enum class Kind { kFinite, kInfinite, kUndefined };
  double value = 0.0;
  Kind kind = Kind::kUndefined;
};

struct TransitionTable {
  std::size_t correct_to_correct = 0;
  std::size_t correct_to_incorrect = 0;
  std::size_t incorrect_to_correct = 0;
  std::size_t incorrect_to_incorrect = 0;

  std::size_t total() const {
    return correct_to_correct + correct_to_incorrect + incorrect_to_correct +
           incorrect_to_incorrect;
  }
};

struct MethodMetrics {
  Method method = Method::kRag;
  double accuracy = 0.0;
  Rate cr;
  Rate dr;
  RateRatio cr_dr_ratio;
  TransitionTable transitions;
};

struct MetricsReport {
  std::size_t samples = 0;
  double baseline_accuracy = 0.0;
  std::optional<MethodMetrics> rag;
  std::optional<MethodMetrics> intervention;
  std::optional<Rate> rr;
  std::optional<Rate> sr;
  std::optional<Rate> nr;
  std::optional<double> gfr;
  std::size_t failed_generations = 0;
  double threshold = 1.0;
};

inline constexpr double kDefaultCorrectnessThreshold = 1.0;
inline constexpr std::size_t kMinResponseChars = 5;
inline constexpr std::size_t kMaxTokenRepeats = 5;

// Throws kInvalidArgument when a present score is outside [0, 1].
void validate_records(std::span<const EvalRecord> records);

double score_of(const EvalRecord& record, Method method);

double accuracy(std::span<const double> scores);
double accuracy(std::span<const EvalRecord> records, Method method);

Rate correction_rate(std::span<const EvalRecord> records, Method method);
Rate degradation_rate(std::span<const EvalRecord> records, Method method);
Rate recovery_rate(std::span<const EvalRecord> records);
Rate strictly_cured_rate(std::span<const EvalRecord> records);
Rate novel_recovery_rate(std::span<const EvalRecord> records);

RateRatio cr_dr_ratio(const Rate& cr, const Rate& dr);

bool generation_failure(std::string_view text);

// Mean failure indicator over records that carry a response; nullopt if none do.
std::optional<double> gfr(std::span<const EvalRecord> records);

// Copy of `records` with every failed generation's score set to 0.
std::vector<EvalRecord> apply_failure_zeroing(std::span<const EvalRecord> records);

// Baseline -> method flips after binarizing at score >= threshold.
TransitionTable transition_table(std::span<const EvalRecord> records,
                                 Method method, double threshold);

// Failure zeroing first, then every metric the records support.
MetricsReport evaluate(std::span<const EvalRecord> records,
                       double threshold = kDefaultCorrectnessThreshold);

// 0.6376 -> "63.76"
std::string format_percent(double fraction);

}  // namespace bair
