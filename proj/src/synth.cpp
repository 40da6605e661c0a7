#include "bair/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <string>

#include "bair/error.hpp"
#include "bair/patp.hpp"
#include "bair/vsmr.hpp"

namespace bair {

std::string_view to_string(BoundarySide side) {
  switch (side) {
    case BoundarySide::kHead: return "head";
    case BoundarySide::kTail: return "tail";
    case BoundarySide::kBoth: return "both";
  }
  return "tail";
}

BoundarySide parse_boundary_side(std::string_view text) {
  if (text == "head") return BoundarySide::kHead;
  if (text == "tail") return BoundarySide::kTail;
  if (text == "both") return BoundarySide::kBoth;
  throw Error(ErrorCode::kInvalidArgument,
              "boundary side must be head, tail or both, got '" + std::string(text) + "'");
}

std::string_view to_string(ToyAnswer answer) {
  switch (answer) {
    case ToyAnswer::kCorrect: return "correct";
    case ToyAnswer::kBoundaryDistractor: return "boundary_distractor";
    case ToyAnswer::kOther: return "other";
  }
  return "other";
}

void ScenarioParams::validate() const {
  const auto fail = [](const char* what) {
    throw Error(ErrorCode::kInvalidArgument, std::string("scenario: ") + what);
  };
  if (n_visual < 2) fail("n_visual must be >= 2");
  if (n_text < 10) fail("n_text must be >= 10");
  if (!(visual_spike_strength > 0.0)) fail("visual_spike_strength must be > 0");
  if (!(suppression_delta >= 0.0)) fail("suppression_delta must be >= 0");
  if (!(boundary_spike_strength >= 0.0)) fail("boundary_spike_strength must be >= 0");
  if (gt_segment < 1 || gt_segment > kTextSegments) fail("gt_segment must lie in 1..5");
  if (!(noise_scale >= 0.0)) fail("noise_scale must be >= 0");
  if (!(text_evidence_strength >= 0.0)) fail("text_evidence_strength must be >= 0");
}

int text_segment_of(std::size_t j, std::size_t text_len) {
  return static_cast<int>(j * kTextSegments / text_len) + 1;
}

namespace {

std::size_t argmax(std::span<const double> xs) {
  return static_cast<std::size_t>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

constexpr int kMaxRegenerations = 64;

}  // namespace

Scenario generate(const ScenarioParams& params) {
  params.validate();
  const std::size_t nv = params.n_visual, nt = params.n_text;

  ModalityLayout layout;
  layout.sequence_len = nv + nt;
  layout.visual = {0, nv};
  layout.text = {nv, nt};
  layout.context = Span{nv, nt};

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_patch(0, nv - 1);

  Scenario sc;
  sc.params = params;
  sc.gt_text_segment = params.gt_segment;

  // Noise can in principle outrank a weak spike, either directly or after
  // gating; such draws are discarded.
  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxRegenerations) {
      throw Error(ErrorCode::kInvalidArgument,
                  "scenario: visual spike does not dominate the noise");
    }
    std::vector<double> logits(layout.sequence_len);
    for (double& x : logits) x = params.noise_scale * noise(rng);
    sc.gt_visual_index = pick_patch(rng);
    logits[sc.gt_visual_index] += params.visual_spike_strength;
    for (std::size_t j = 0; j < nt; ++j) {
      if (text_segment_of(j, nt) == params.gt_segment) {
        logits[nv + j] += params.text_evidence_strength;
      }
    }
    const auto visual = std::span<const double>(logits).first(nv);
    if (argmax(visual) != sc.gt_visual_index) continue;
    if (argmax(standardize_and_gate(visual).values) != sc.gt_visual_index) continue;

    sc.clean.logits = std::move(logits);
    break;
  }

  char id[32];
  std::snprintf(id, sizeof id, "synth-%016llx",
                static_cast<unsigned long long>(params.seed));
  sc.clean.layout = layout;
  sc.clean.sample_id = id;

  sc.corrupted = sc.clean;
  for (std::size_t i = 0; i < nv; ++i) sc.corrupted.logits[i] -= params.suppression_delta;
  const std::size_t w = boundary_window(nt, kSpikedTextFraction);
  if (params.boundary_side != BoundarySide::kTail) {
    for (std::size_t j = 0; j < w; ++j) {
      sc.corrupted.logits[nv + j] += params.boundary_spike_strength;
    }
  }
  if (params.boundary_side != BoundarySide::kHead) {
    for (std::size_t j = nt - w; j < nt; ++j) {
      sc.corrupted.logits[nv + j] += params.boundary_spike_strength;
    }
  }
  return sc;
}

ToyAnswer toy_answer(const BottleneckVector& vec, const Scenario& scenario,
                     double threshold) {
  if (!(vec.layout == scenario.clean.layout)) {
    throw Error(ErrorCode::kLayoutMismatch, "toy_answer: layout differs from scenario");
  }
  const AttentionMeasure m = measure(vec);
  if (m.mass >= threshold && argmax(vec.visual_logits()) == scenario.gt_visual_index) {
    return ToyAnswer::kCorrect;
  }
  const auto text = vec.text_logits();
  const int seg = text_segment_of(argmax(text), text.size());
  if (seg == scenario.gt_text_segment) return ToyAnswer::kCorrect;
  if (seg == 1 || seg == kTextSegments) return ToyAnswer::kBoundaryDistractor;
  return ToyAnswer::kOther;
}

namespace {

double score(ToyAnswer a) { return a == ToyAnswer::kCorrect ? 1.0 : 0.0; }

}  // namespace

SuiteResult run_suite(const SuiteOptions& options) {
  options.params.validate();
  options.config.validate();
  if (!(options.hard_fraction >= 0.0 && options.hard_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "suite: hard_fraction must lie in [0, 1]");
  }
  SuiteResult out;
  std::mt19937_64 suite_rng(options.seed);
  std::uniform_int_distribution<int> pick_segment(1, kTextSegments);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < options.n; ++i) {
    ScenarioParams params = options.params;
    params.seed = suite_rng();
    if (options.vary_segment) params.gt_segment = pick_segment(suite_rng);
    if (unit(suite_rng) < options.hard_fraction) {
      params.visual_spike_strength = options.hard_spike_strength;
    }
    Scenario sc = generate(params);

    const std::vector<BottleneckVector> reference{sc.clean};
    const CalibrationTargets targets = extract_targets(reference, sc.clean.sample_id);
    CalibratedHead cal = calibrate_head(sc.corrupted, targets, options.config);

    const ToyAnswer base = toy_answer(sc.clean, sc, options.threshold);
    const ToyAnswer rag = toy_answer(sc.corrupted, sc, options.threshold);
    const ToyAnswer fixed = toy_answer(cal.vector, sc, options.threshold);

    EvalRecord rec;
    rec.sample_id = sc.clean.sample_id;
    rec.score_baseline = score(base);
    rec.score_rag = score(rag);
    rec.score_intervention = score(fixed);

    out.records.push_back(std::move(rec));
    out.rag_answers.push_back(rag);
    out.calibrated.push_back(std::move(cal.vector));
    out.diagnostics.push_back(std::move(cal.diagnostics));
    out.scenarios.push_back(std::move(sc));
  }
  return out;
}

std::vector<SegmentSample> segment_samples(const SuiteResult& suite, Method method) {
  std::vector<SegmentSample> out;
  out.reserve(suite.records.size());
  for (std::size_t i = 0; i < suite.records.size(); ++i) {
    SegmentSample s;
    s.assignment.segment = suite.scenarios[i].gt_text_segment;
    s.assignment.match_positions = {suite.scenarios[i].gt_text_segment};
    s.score = score_of(suite.records[i], method);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bair
