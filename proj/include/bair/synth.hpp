#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "bair/attention.hpp"
#include "bair/metrics.hpp"
#include "bair/pipeline.hpp"
#include "bair/profile.hpp"

namespace bair {

enum class BoundarySide { kHead, kTail, kBoth };

std::string_view to_string(BoundarySide side);
BoundarySide parse_boundary_side(std::string_view text);

struct ScenarioParams {
  std::size_t n_visual = 64;
  std::size_t n_text = 200;
  double visual_spike_strength = 8.0;
  double suppression_delta = 4.0;
  double boundary_spike_strength = 6.0;
  BoundarySide boundary_side = BoundarySide::kTail;
  int gt_segment = 3;
  double noise_scale = 0.1;
  // Logit bump on the text tokens of the evidence segment. Zero by default:
  // the toy model only locates evidence by position.
  double text_evidence_strength = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Paired clean (reference-like) and corrupted (RAG-like) rows.
struct Scenario {
  BottleneckVector clean;
  BottleneckVector corrupted;
  std::size_t gt_visual_index = 0;
  int gt_text_segment = 1;
  ScenarioParams params;
};

inline constexpr double kSpikedTextFraction = 0.1;
inline constexpr double kDefaultToyThreshold = 0.3;
inline constexpr int kTextSegments = 5;

Scenario generate(const ScenarioParams& params);

enum class ToyAnswer { kCorrect, kBoundaryDistractor, kOther };

std::string_view to_string(ToyAnswer answer);

// 1-based fifth of the text span that text index j (0-based) falls in.
int text_segment_of(std::size_t j, std::size_t text_len);

// Visual route when enough mass sits on the evidence patch; otherwise the
// model copies from wherever its text attention peaks.
ToyAnswer toy_answer(const BottleneckVector& vec, const Scenario& scenario,
                     double threshold = kDefaultToyThreshold);

struct SuiteOptions {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  ScenarioParams params;
  BairConfig config;
  double threshold = kDefaultToyThreshold;
  // Draw gt_segment uniformly from 1..5 per scenario instead of using params.
  bool vary_segment = true;
  // Share of scenarios whose image evidence is weak (spike of
  // hard_spike_strength), so the baseline has to fall back on text.
  double hard_fraction = 0.2;
  double hard_spike_strength = 2.0;
};

struct SuiteResult {
  std::vector<Scenario> scenarios;
  std::vector<EvalRecord> records;
  std::vector<ToyAnswer> rag_answers;
  std::vector<BottleneckVector> calibrated;
  std::vector<HeadDiagnostics> diagnostics;
};

SuiteResult run_suite(const SuiteOptions& options);

// (gt segment, method score) pairs for segment-conditioned accuracy.
std::vector<SegmentSample> segment_samples(const SuiteResult& suite, Method method);

}  // namespace bair
