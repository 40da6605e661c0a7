#include "bair/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bair/error.hpp"

namespace bair {

std::string to_string(const HeadKey& key) {
  return "(layer " + std::to_string(key.layer) + ", head " +
         std::to_string(key.head) + ")";
}

const TargetEntry& CalibrationTargets::at(const HeadKey& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) {
    throw Error(ErrorCode::kMissingTarget,
                "no calibration target for " + to_string(key));
  }
  return it->second;
}

void BairConfig::validate() const {
  if (!(alpha_v > 0.0) || !std::isfinite(alpha_v)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha_v must be > 0");
  }
  if (!(t_max > 0.0) || !std::isfinite(t_max)) {
    throw Error(ErrorCode::kInvalidArgument, "t_max must be > 0");
  }
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eps must be > 0");
  if (!(boundary_fraction > 0.0 && boundary_fraction <= 0.5)) {
    throw Error(ErrorCode::kInvalidArgument,
                "boundary fraction must lie in (0, 0.5]");
  }
  if (!enable_vsmr && !enable_patp) {
    throw Error(ErrorCode::kInvalidArgument,
                "at least one of VSMR and PATP must be enabled");
  }
}

CalibrationTargets extract_targets(std::span<const BottleneckVector> reference,
                                   std::string source_id) {
  CalibrationTargets targets;
  targets.source_id = std::move(source_id);
  for (const auto& vec : reference) {
    const HeadKey key{vec.layer, vec.head};
    if (targets.entries.contains(key)) {
      throw Error(ErrorCode::kDuplicateTarget,
                  "duplicate reference vector for " + to_string(key) +
                      " in sample " + vec.sample_id);
    }
    const AttentionMeasure m = measure(vec);
    TargetEntry entry;
    entry.m_target = clamp_target_mass(m.mass);
    entry.mass_clamped = entry.m_target != m.mass;
    entry.s_target = m.sharpness;
    entry.n_visual = vec.layout.visual.length;
    targets.entries.emplace(key, entry);
    if (targets.source_id.empty()) targets.source_id = vec.sample_id;
  }
  return targets;
}

namespace {

Span patp_region(const ModalityLayout& layout, PatpScope scope) {
  if (scope == PatpScope::kFullText) return layout.text;
  if (!layout.context) {
    throw Error(ErrorCode::kLayoutMismatch,
                "context-only PATP requested but layout has no context span");
  }
  return *layout.context;
}

}  // namespace

CalibratedHead calibrate_head(const BottleneckVector& vec,
                              const CalibrationTargets& targets,
                              const BairConfig& config) {
  config.validate();
  const HeadKey key{vec.layer, vec.head};
  const TargetEntry& target = targets.at(key);
  vec.validate();
  if (vec.layout.visual.empty() || vec.layout.text.empty()) {
    throw Error(ErrorCode::kLayoutMismatch,
                "sample " + vec.sample_id + " " + to_string(key) +
                    ": calibration needs visual and text tokens");
  }
  if (target.n_visual != vec.layout.visual.length) {
    throw Error(ErrorCode::kLayoutMismatch,
                "sample " + vec.sample_id + " " + to_string(key) + ": " +
                    std::to_string(vec.layout.visual.length) +
                    " visual tokens but reference pass had " +
                    std::to_string(target.n_visual));
  }

  CalibratedHead out{vec, {}};
  HeadDiagnostics& diag = out.diagnostics;
  diag.key = key;
  diag.sample_id = vec.sample_id;
  diag.m_target = clamp_target_mass(target.m_target);
  diag.s_target = std::clamp(target.s_target, 0.0, 1.0);
  diag.flags.targets_clamped =
      target.mass_clamped || diag.m_target != target.m_target ||
      diag.s_target != target.s_target;
  diag.pre_measure = measure(vec);

  auto& logits = out.vector.logits;
  const Span visual = vec.layout.visual;

  if (config.enable_vsmr) {
    // Every non-visual logit competes in the same softmax, so all of them
    // enter the mass-restoring shift.
    std::vector<double> rest;
    rest.reserve(logits.size() - visual.length);
    for (std::size_t i = 0; i < logits.size(); ++i) {
      if (!visual.contains(i)) rest.push_back(logits[i]);
    }
    const VsmrResult vsmr = apply_vsmr(vec.visual_logits(), rest, diag.m_target,
                                       diag.s_target, config.vsmr_params());
    std::copy(vsmr.calibrated_visual.begin(), vsmr.calibrated_visual.end(),
              logits.begin() + static_cast<std::ptrdiff_t>(visual.start));
    diag.temperature = vsmr.temperature;
    diag.alpha_shift = vsmr.alpha_shift;
    diag.flags.degenerate_visual = vsmr.temperature.degenerate;
    diag.flags.sharpness_clamped = vsmr.temperature.clamped;
  }

  if (config.enable_patp) {
    const Span region = patp_region(vec.layout, config.patp_scope);
    if (!region.empty()) {
      const auto slice = std::span<const double>(logits).subspan(region.start,
                                                                 region.length);
      const TextCalibration text = calibrate_text(slice, config.boundary_fraction);
      std::copy(text.logits.begin(), text.logits.end(),
                logits.begin() + static_cast<std::ptrdiff_t>(region.start));
      diag.penalty_weights = text.weights;
    }
  }

  diag.post_measure = measure(out.vector);
  return out;
}

DumpSummary summarize(std::span<const HeadDiagnostics> diagnostics) {
  DumpSummary s;
  s.heads = diagnostics.size();
  if (diagnostics.empty()) return s;
  std::vector<int> iterations;
  for (const auto& d : diagnostics) {
    s.mean_pre_mass += d.pre_measure.mass;
    s.mean_post_mass += d.post_measure.mass;
    s.mean_pre_sharpness += d.pre_measure.sharpness;
    s.mean_post_sharpness += d.post_measure.sharpness;
    s.sharpness_clamped += d.flags.sharpness_clamped ? 1 : 0;
    s.degenerate_visual += d.flags.degenerate_visual ? 1 : 0;
    s.targets_clamped += d.flags.targets_clamped ? 1 : 0;
    s.mean_lambda_prim += d.penalty_weights.lambda_prim;
    s.mean_lambda_rec += d.penalty_weights.lambda_rec;
    s.max_lambda_prim = std::max(s.max_lambda_prim, d.penalty_weights.lambda_prim);
    s.max_lambda_rec = std::max(s.max_lambda_rec, d.penalty_weights.lambda_rec);
    iterations.push_back(d.temperature.iterations);
  }
  const auto n = static_cast<double>(diagnostics.size());
  s.mean_pre_mass /= n;
  s.mean_post_mass /= n;
  s.mean_pre_sharpness /= n;
  s.mean_post_sharpness /= n;
  s.mean_lambda_prim /= n;
  s.mean_lambda_rec /= n;
  auto mid = iterations.begin() + static_cast<std::ptrdiff_t>(iterations.size() / 2);
  std::nth_element(iterations.begin(), mid, iterations.end());
  s.median_iterations = static_cast<std::size_t>(*mid);
  return s;
}

CalibratedDump calibrate_dump(std::span<const BottleneckVector> vectors,
                              const CalibrationTargets& targets,
                              const BairConfig& config) {
  config.validate();
  std::string missing;
  for (const auto& vec : vectors) {
    const HeadKey key{vec.layer, vec.head};
    if (!targets.entries.contains(key)) {
      missing += (missing.empty() ? "" : ", ") + to_string(key);
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::kMissingTarget,
                "calibration targets missing for " + missing);
  }

  CalibratedDump out;
  out.vectors.reserve(vectors.size());
  out.diagnostics.reserve(vectors.size());
  for (const auto& vec : vectors) {
    CalibratedHead head = calibrate_head(vec, targets, config);
    out.vectors.push_back(std::move(head.vector));
    out.diagnostics.push_back(std::move(head.diagnostics));
  }
  out.summary = summarize(out.diagnostics);
  return out;
}

}  // namespace bair
