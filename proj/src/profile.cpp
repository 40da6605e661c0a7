#include "bair/profile.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "bair/error.hpp"

namespace bair {

namespace {

char lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t b = i, e = j;
    while (b < e && is_punct(text[b])) ++b;
    while (e > b && is_punct(text[e - 1])) --e;
    if (b < e) {
      std::string token(text.substr(b, e - b));
      std::transform(token.begin(), token.end(), token.begin(), lower);
      out.push_back(std::move(token));
    }
    i = j;
  }
  return out;
}

std::size_t lcs_length(std::span<const std::string> a,
                       std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::span<const std::string> candidate,
               std::span<const std::string> reference) {
  const std::size_t lcs = lcs_length(candidate, reference);
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(candidate.size());
  const double r = static_cast<double>(lcs) / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

std::vector<std::size_t> bin_sizes(std::size_t length, std::size_t bins) {
  std::vector<std::size_t> sizes(bins, length / bins);
  for (std::size_t k = 0; k < length % bins; ++k) ++sizes[k];
  return sizes;
}

PositionalProfile positional_profile(std::span<const std::string> response,
                                     std::span<const std::string> document,
                                     std::size_t bins, std::string method_label) {
  if (document.empty()) {
    throw Error(ErrorCode::kEmptyInput, "positional_profile: empty document");
  }
  if (bins < 2 || bins > document.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "positional_profile: bins must lie in [2, " +
                    std::to_string(document.size()) + "]");
  }
  PositionalProfile profile;
  profile.method_label = std::move(method_label);
  profile.bin_sizes = bin_sizes(document.size(), bins);
  profile.bin_edges.push_back(0.0);
  std::size_t offset = 0;
  for (std::size_t size : profile.bin_sizes) {
    profile.values.push_back(rouge_l(response, document.subspan(offset, size)));
    offset += size;
    profile.bin_edges.push_back(static_cast<double>(offset) /
                                static_cast<double>(document.size()));
  }
  return profile;
}

SegmentAssignment classify_segment(std::string_view evidence,
                                   std::string_view document, int segments) {
  if (segments < 1) {
    throw Error(ErrorCode::kInvalidArgument, "classify_segment: segments must be >= 1");
  }
  SegmentAssignment out;
  if (evidence.empty() || document.empty() || evidence.size() > document.size()) {
    return out;
  }
  std::string needle(evidence), hay(document);
  std::transform(needle.begin(), needle.end(), needle.begin(), lower);
  std::transform(hay.begin(), hay.end(), hay.begin(), lower);

  const std::size_t len = hay.size();
  const auto k = static_cast<std::size_t>(segments);
  // Segment s covers [s * len / k, (s + 1) * len / k).
  const auto segment_of = [&](std::size_t pos) {
    std::size_t s = 0;
    while (s + 1 < k && (s + 1) * len / k <= pos) ++s;
    return s;
  };

  std::vector<bool> hit(k, false);
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + 1)) {
    const std::size_t first = segment_of(pos);
    const std::size_t last = segment_of(pos + needle.size() - 1);
    for (std::size_t s = first; s <= last; ++s) hit[s] = true;
  }
  for (std::size_t s = 0; s < k; ++s) {
    if (hit[s]) out.match_positions.push_back(static_cast<int>(s + 1));
  }
  if (out.match_positions.size() == 1) out.segment = out.match_positions.front();
  return out;
}

std::vector<SegmentAccuracy> segment_accuracy(std::span<const SegmentSample> samples,
                                              const BootstrapOptions& options) {
  if (options.segments < 1 || options.resamples == 0 ||
      !(options.confidence > 0.0 && options.confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "segment_accuracy: bad bootstrap options");
  }
  std::vector<std::vector<double>> groups(static_cast<std::size_t>(options.segments));
  for (const auto& s : samples) {
    if (!(s.score >= 0.0 && s.score <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "segment_accuracy: score outside [0, 1]");
    }
    if (!s.assignment.segment) continue;
    const int seg = *s.assignment.segment;
    if (seg < 1 || seg > options.segments) {
      throw Error(ErrorCode::kInvalidArgument, "segment_accuracy: segment out of range");
    }
    groups[static_cast<std::size_t>(seg - 1)].push_back(s.score);
  }

  const double tail = 0.5 * (1.0 - options.confidence);
  const std::size_t b = options.resamples;
  const auto lo_idx = static_cast<std::size_t>(std::floor(tail * static_cast<double>(b)));
  const auto hi_idx = std::min(
      b - 1, static_cast<std::size_t>(std::ceil((1.0 - tail) * static_cast<double>(b))) - 1);

  std::vector<SegmentAccuracy> out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& scores = groups[g];
    SegmentAccuracy acc;
    acc.segment = static_cast<int>(g + 1);
    acc.samples = scores.size();
    if (scores.empty()) {
      out.push_back(acc);
      continue;
    }
    double total = 0.0;
    for (double s : scores) total += s;
    acc.mean = total / static_cast<double>(scores.size());

    std::mt19937_64 rng(options.seed + 0x9E3779B97F4A7C15ULL * (g + 1));
    std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
    std::vector<double> means(b);
    for (double& m : means) {
      double sum = 0.0;
      for (std::size_t i = 0; i < scores.size(); ++i) sum += scores[pick(rng)];
      m = sum / static_cast<double>(scores.size());
    }
    std::sort(means.begin(), means.end());
    acc.ci_low = means[lo_idx];
    acc.ci_high = means[hi_idx];
    out.push_back(acc);
  }
  return out;
}

}  // namespace bair
