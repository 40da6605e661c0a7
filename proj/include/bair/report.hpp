#pragma once

#include <span>
#include <string>

#include "bair/metrics.hpp"
#include "bair/pipeline.hpp"
#include "bair/profile.hpp"

namespace bair {

// Tab-separated tables for plotting tools. Numbers use %.12g so equal inputs
// always produce equal bytes.
std::string format_number(double x);

std::string diagnostics_table(std::span<const HeadDiagnostics> diagnostics);
std::string summary_text(const DumpSummary& summary);
std::string measure_table(std::span<const BottleneckVector> vectors);
std::string metrics_text(const MetricsReport& report);
std::string profile_table(const PositionalProfile& profile);
std::string segment_table(std::span<const SegmentAccuracy> rows);

}  // namespace bair
