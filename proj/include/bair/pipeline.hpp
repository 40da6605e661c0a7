#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bair/attention.hpp"
#include "bair/patp.hpp"
#include "bair/vsmr.hpp"

namespace bair {

struct HeadKey {
  int layer = 0;
  int head = 0;

  friend auto operator<=>(const HeadKey&, const HeadKey&) = default;
};

std::string to_string(const HeadKey& key);

struct TargetEntry {
  double m_target = 0.5;
  double s_target = 0.0;
  // Visual token count of the reference pass; the calibrated pass must match.
  std::size_t n_visual = 0;
  bool mass_clamped = false;
};

// Per-(layer, head) mass/sharpness anchors measured on the reference pass.
struct CalibrationTargets {
  std::map<HeadKey, TargetEntry> entries;
  std::string source_id;

  const TargetEntry& at(const HeadKey& key) const;
};

enum class PatpScope { kFullText, kContextOnly };

struct BairConfig {
  double alpha_v = 0.5;
  double t_max = 100.0;
  double eps = 1e-4;
  double boundary_fraction = kDefaultBoundaryFraction;
  bool enable_vsmr = true;
  bool enable_patp = true;
  PatpScope patp_scope = PatpScope::kFullText;

  void validate() const;
  VsmrParams vsmr_params() const { return {alpha_v, t_max, eps}; }
};

struct HeadFlags {
  bool degenerate_visual = false;
  bool sharpness_clamped = false;
  bool targets_clamped = false;
};

struct HeadDiagnostics {
  HeadKey key;
  std::string sample_id;
  double m_target = 0.0;
  double s_target = 0.0;
  AttentionMeasure pre_measure;
  AttentionMeasure post_measure;
  TemperatureSolution temperature;
  double alpha_shift = 0.0;
  PenaltyWeights penalty_weights;
  HeadFlags flags;
};

struct CalibratedHead {
  BottleneckVector vector;
  HeadDiagnostics diagnostics;
};

struct DumpSummary {
  std::size_t heads = 0;
  double mean_pre_mass = 0.0;
  double mean_post_mass = 0.0;
  double mean_pre_sharpness = 0.0;
  double mean_post_sharpness = 0.0;
  std::size_t sharpness_clamped = 0;
  std::size_t degenerate_visual = 0;
  std::size_t targets_clamped = 0;
  double mean_lambda_prim = 0.0;
  double mean_lambda_rec = 0.0;
  double max_lambda_prim = 0.0;
  double max_lambda_rec = 0.0;
  std::size_t median_iterations = 0;
};

struct CalibratedDump {
  std::vector<BottleneckVector> vectors;
  std::vector<HeadDiagnostics> diagnostics;
  DumpSummary summary;
};

// Reference pass -> per-head (M_target, S_target).
CalibrationTargets extract_targets(std::span<const BottleneckVector> reference,
                                   std::string source_id = {});

CalibratedHead calibrate_head(const BottleneckVector& vec,
                              const CalibrationTargets& targets,
                              const BairConfig& config);

CalibratedDump calibrate_dump(std::span<const BottleneckVector> vectors,
                              const CalibrationTargets& targets,
                              const BairConfig& config);

DumpSummary summarize(std::span<const HeadDiagnostics> diagnostics);

}  // namespace bair
