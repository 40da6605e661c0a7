#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bair {

using Tokens = std::vector<std::string>;

// Lowercase, split on whitespace, strip leading/trailing punctuation.
Tokens tokenize(std::string_view text);

std::size_t lcs_length(std::span<const std::string> a,
                       std::span<const std::string> b);

// ROUGE-L F-measure; 0 when either side is empty or nothing matches.
double rouge_l(std::span<const std::string> candidate,
               std::span<const std::string> reference);

struct PositionalProfile {
  std::vector<double> bin_edges;  // K + 1 values from 0 to 1
  std::vector<double> values;     // K ROUGE-L scores
  std::vector<std::size_t> bin_sizes;
  std::string method_label;
};

inline constexpr std::size_t kDefaultProfileBins = 20;

// Contiguous near-equal token bins; the first (len % K) bins get one extra token.
std::vector<std::size_t> bin_sizes(std::size_t length, std::size_t bins);

PositionalProfile positional_profile(std::span<const std::string> response,
                                     std::span<const std::string> document,
                                     std::size_t bins = kDefaultProfileBins,
                                     std::string method_label = {});

struct SegmentAssignment {
  std::optional<int> segment;       // 1-based, set iff exactly one match
  std::vector<int> match_positions;  // sorted 1-based segment indices
};

inline constexpr int kDefaultSegments = 5;

// Case-insensitive substring localization of `evidence` over k equal
// character segments of `document`.
SegmentAssignment classify_segment(std::string_view evidence,
                                   std::string_view document,
                                   int segments = kDefaultSegments);

struct SegmentSample {
  SegmentAssignment assignment;
  double score = 0.0;
};

struct SegmentAccuracy {
  int segment = 0;
  std::size_t samples = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool empty() const { return samples == 0; }
};

struct BootstrapOptions {
  std::uint64_t seed = 0;
  std::size_t resamples = 1000;
  double confidence = 0.95;
  int segments = kDefaultSegments;
};

// Per-segment mean score with a percentile-bootstrap interval. Unassigned
// samples are ignored.
std::vector<SegmentAccuracy> segment_accuracy(std::span<const SegmentSample> samples,
                                              const BootstrapOptions& options);

}  // namespace bair
