#pragma once

#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bair/error.hpp"

namespace bair {

// Half-open index range [start, start + length).
struct Span {
  std::size_t start = 0;
  std::size_t length = 0;

  std::size_t end() const { return start + length; }
  bool contains(std::size_t i) const { return i >= start && i < end(); }
  bool empty() const { return length == 0; }

  friend bool operator==(const Span&, const Span&) = default;
};

// Partition of one attention row into visual tokens, penalizable text tokens
// and (optionally) the retrieved-document sub-range of the text.
struct ModalityLayout {
  std::size_t sequence_len = 0;
  Span visual;
  Span text;
  std::optional<Span> context;

  // Throws kSpanOverlap for overlapping visual/text spans and
  // kLayoutMismatch for anything out of range.
  void validate() const;

  friend bool operator==(const ModalityLayout&, const ModalityLayout&) = default;
};

// One pre-softmax attention row for a single (layer, head).
struct BottleneckVector {
  std::vector<double> logits;
  ModalityLayout layout;
  int layer = 0;
  int head = 0;
  std::string sample_id;

  std::span<const double> visual_logits() const;
  std::span<const double> text_logits() const;

  // Layout invariants, length match and finiteness.
  void validate() const;
};

struct AttentionMeasure {
  double mass = 0.0;
  double sharpness = 0.0;
};

std::vector<double> softmax(std::span<const double> logits);

double log_sum_exp(std::span<const double> logits);

double visual_mass(std::span<const double> probs, const ModalityLayout& layout);

// 1 - H(p) / log(n) for a distribution p over n >= 1 entries. Entries need not
// sum to one; they are renormalized first. `log_base` only exists so callers can
// confirm the base cancels.
double normalized_sharpness(std::span<const double> weights,
                            double log_base = std::numbers::e);

double visual_sharpness(std::span<const double> probs,
                        const ModalityLayout& layout);

// Sharpness of softmax(logits) computed in log space, so it stays accurate
// when the distribution is far from uniform. A single entry is maximally sharp.
double logit_sharpness(std::span<const double> logits);

// Global softmax, then visual mass and sharpness of the visual span.
AttentionMeasure measure(const BottleneckVector& vec);

void require_finite(std::span<const double> values, std::string_view what);

}  // namespace bair
