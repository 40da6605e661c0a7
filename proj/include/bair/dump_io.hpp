#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bair/attention.hpp"
#include "bair/metrics.hpp"
#include "bair/pipeline.hpp"
#include "bair/profile.hpp"

namespace bair {

// Dump layout:
//   line 1   "bair-dump/1"
//   line 2   JSON manifest (sorted keys): format_version, sample_id,
//            sequence_len, visual_span, text_span, context_span, layers, heads,
//            encoding, value_count
//   payload  inline: one line per (layer, head) row of N decimal values
//            binary: value_count little-endian float32, row-major
//                    [layer][head][position]
// A dump holds one sample with a full layers x heads grid sharing one layout.
inline constexpr std::string_view kDumpFormatVersion = "bair-dump/1";
inline constexpr std::string_view kTargetsFormatVersion = "bair-targets/1";

enum class Encoding { kInline, kBinary };

std::string_view to_string(Encoding encoding);
Encoding parse_encoding(std::string_view text);

std::string serialize_dump(std::span<const BottleneckVector> vectors,
                           Encoding encoding);
std::vector<BottleneckVector> parse_dump(std::string_view bytes,
                                         std::string_view source = "<memory>");

void write_dump(std::span<const BottleneckVector> vectors,
                const std::filesystem::path& path, Encoding encoding);
std::vector<BottleneckVector> read_dump(const std::filesystem::path& path);

std::string serialize_targets(const CalibrationTargets& targets);
CalibrationTargets parse_targets(std::string_view text,
                                 std::string_view source = "<memory>");
void write_targets(const CalibrationTargets& targets,
                   const std::filesystem::path& path);
CalibrationTargets read_targets(const std::filesystem::path& path);

// Tab-separated with header. Columns by name: sample_id and S_B are
// required; S_R, S_I and response_text are optional, and an empty cell means
// the value is absent. Text cells escape \\, \t, \n and \r.
std::string serialize_scores(std::span<const EvalRecord> records);
std::vector<EvalRecord> parse_scores(std::string_view text,
                                     std::string_view source = "<memory>");
void write_scores(std::span<const EvalRecord> records,
                  const std::filesystem::path& path);
std::vector<EvalRecord> read_scores(const std::filesystem::path& path);

// Tab-separated: sample_id, evidence, document, score.
struct LabeledSample {
  std::string sample_id;
  std::string evidence;
  std::string document;
  double score = 0.0;
};
std::vector<LabeledSample> parse_segment_samples(std::string_view text,
                                                 std::string_view source = "<memory>");

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view bytes);

std::string escape_field(std::string_view raw);
std::string unescape_field(std::string_view escaped);

}  // namespace bair
