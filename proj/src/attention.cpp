#include "bair/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bair {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kLayoutMismatch: return "layout_mismatch";
    case ErrorCode::kNoVisualTokens: return "no_visual_tokens";
    case ErrorCode::kZeroVisualMass: return "zero_visual_mass";
    case ErrorCode::kDuplicateTarget: return "duplicate_target";
    case ErrorCode::kMissingTarget: return "missing_target";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kSpanOverlap: return "span_overlap";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

namespace {

double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

bool all_equal(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(),
                     [&](double x) { return x == xs.front(); });
}

}  // namespace

void require_finite(std::span<const double> values, std::string_view what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::kNonFinite, "non-finite logit in " +
                                             std::string(what) + " at index " +
                                             std::to_string(i));
    }
  }
}

void ModalityLayout::validate() const {
  if (sequence_len == 0) {
    throw Error(ErrorCode::kLayoutMismatch, "layout: sequence_len must be > 0");
  }
  if (visual.end() > sequence_len || text.end() > sequence_len) {
    throw Error(ErrorCode::kLayoutMismatch,
                "layout: span exceeds sequence_len " +
                    std::to_string(sequence_len));
  }
  if (!visual.empty() && !text.empty() && visual.start < text.end() &&
      text.start < visual.end()) {
    throw Error(ErrorCode::kSpanOverlap,
                "layout: visual span [" + std::to_string(visual.start) + ", " +
                    std::to_string(visual.end()) + ") overlaps text span [" +
                    std::to_string(text.start) + ", " +
                    std::to_string(text.end()) + ")");
  }
  if (context) {
    if (context->start < text.start || context->end() > text.end()) {
      throw Error(ErrorCode::kLayoutMismatch,
                  "layout: context span not contained in text span");
    }
  }
}

std::span<const double> BottleneckVector::visual_logits() const {
  return std::span<const double>(logits).subspan(layout.visual.start,
                                                 layout.visual.length);
}

std::span<const double> BottleneckVector::text_logits() const {
  return std::span<const double>(logits).subspan(layout.text.start,
                                                 layout.text.length);
}

void BottleneckVector::validate() const {
  layout.validate();
  if (logits.size() != layout.sequence_len) {
    throw Error(ErrorCode::kLayoutMismatch,
                "sample " + sample_id + ": " + std::to_string(logits.size()) +
                    " logits but layout expects " +
                    std::to_string(layout.sequence_len));
  }
  require_finite(logits, "sample " + sample_id);
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error(ErrorCode::kEmptyInput, "empty logit vector");
  require_finite(logits, "softmax input");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

double log_sum_exp(std::span<const double> logits) {
  if (logits.empty()) throw Error(ErrorCode::kEmptyInput, "empty logit vector");
  require_finite(logits, "log_sum_exp input");
  if (logits.size() == 1) return logits.front();
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double x : logits) total += std::exp(x - peak);
  return peak + std::log(total);
}

double visual_mass(std::span<const double> probs, const ModalityLayout& layout) {
  if (probs.size() != layout.sequence_len) {
    throw Error(ErrorCode::kLayoutMismatch,
                "visual_mass: " + std::to_string(probs.size()) +
                    " probabilities for layout of length " +
                    std::to_string(layout.sequence_len));
  }
  layout.validate();
  double mass = 0.0;
  for (std::size_t i = layout.visual.start; i < layout.visual.end(); ++i) {
    mass += probs[i];
  }
  return clamp_unit(mass);
}

double normalized_sharpness(std::span<const double> weights, double log_base) {
  if (weights.empty()) throw Error(ErrorCode::kNoVisualTokens, "no visual tokens");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error(ErrorCode::kZeroVisualMass, "zero visual mass");
  if (weights.size() == 1) return 1.0;

  const double log_scale = std::log(log_base);
  double entropy = 0.0;
  for (double w : weights) {
    const double p = w / total;
    if (p > 0.0) entropy -= p * (std::log(p) / log_scale);
  }
  const double max_entropy =
      std::log(static_cast<double>(weights.size())) / log_scale;
  return clamp_unit(1.0 - entropy / max_entropy);
}

double visual_sharpness(std::span<const double> probs,
                        const ModalityLayout& layout) {
  if (probs.size() != layout.sequence_len) {
    throw Error(ErrorCode::kLayoutMismatch,
                "visual_sharpness: length does not match layout");
  }
  if (layout.visual.empty()) {
    throw Error(ErrorCode::kNoVisualTokens, "no visual tokens");
  }
  return normalized_sharpness(
      probs.subspan(layout.visual.start, layout.visual.length));
}

double logit_sharpness(std::span<const double> logits) {
  if (logits.empty()) throw Error(ErrorCode::kNoVisualTokens, "no visual tokens");
  if (logits.size() == 1) return 1.0;
  if (all_equal(logits)) return 0.0;
  const double lse = log_sum_exp(logits);
  double entropy = 0.0;
  for (double x : logits) {
    const double log_p = x - lse;
    entropy -= std::exp(log_p) * log_p;
  }
  return clamp_unit(1.0 - entropy / std::log(static_cast<double>(logits.size())));
}

AttentionMeasure measure(const BottleneckVector& vec) {
  vec.validate();
  if (vec.layout.visual.empty()) {
    throw Error(ErrorCode::kNoVisualTokens,
                "sample " + vec.sample_id + ": no visual tokens");
  }
  const auto probs = softmax(vec.logits);
  AttentionMeasure m;
  m.mass = visual_mass(probs, vec.layout);
  if (m.mass == 0.0) {
    throw Error(ErrorCode::kZeroVisualMass,
                "sample " + vec.sample_id + " layer " +
                    std::to_string(vec.layer) + " head " +
                    std::to_string(vec.head) + ": zero visual mass");
  }
  // Renormalizing the visual probabilities equals a softmax over the visual
  // logits alone; doing it in log space avoids underflow in tiny masses.
  m.sharpness = logit_sharpness(vec.visual_logits());
  return m;
}

}  // namespace bair
