#include "bair/vsmr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bair/attention.hpp"
#include "bair/error.hpp"

namespace bair {

double silu(double x) { return x / (1.0 + std::exp(-x)); }

GatedVisualLogits standardize_and_gate(std::span<const double> visual_logits) {
  if (visual_logits.empty()) {
    throw Error(ErrorCode::kEmptyInput, "standardize_and_gate: empty visual logits");
  }
  require_finite(visual_logits, "visual logits");

  const auto n = static_cast<double>(visual_logits.size());
  double mean = 0.0;
  for (double x : visual_logits) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : visual_logits) var += (x - mean) * (x - mean);
  var /= n;

  GatedVisualLogits out;
  out.source_mean = mean;
  out.source_std = std::sqrt(var);
  out.values.assign(visual_logits.size(), 0.0);
  if (!(out.source_std > 0.0)) {
    out.source_std = 0.0;
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < visual_logits.size(); ++i) {
    out.values[i] = silu((visual_logits[i] - mean) / out.source_std);
  }
  return out;
}

double sharpness_at(const GatedVisualLogits& gated, double t) {
  if (t < 0.0 || !std::isfinite(t)) {
    throw Error(ErrorCode::kInvalidArgument,
                "sharpness_at: temperature must be finite and >= 0");
  }
  if (gated.values.empty()) {
    throw Error(ErrorCode::kNoVisualTokens, "sharpness_at: no visual tokens");
  }
  std::vector<double> scaled(gated.values.size());
  std::transform(gated.values.begin(), gated.values.end(), scaled.begin(),
                 [t](double g) { return t * g; });
  return logit_sharpness(scaled);
}

int bisection_iteration_bound(double t_max, double eps) {
  return static_cast<int>(std::ceil(std::log2(t_max / eps))) + 2;
}

TemperatureSolution solve_temperature(const GatedVisualLogits& gated,
                                      double s_target, double t_max,
                                      double eps) {
  if (!(s_target >= 0.0 && s_target <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "solve_temperature: s_target outside [0, 1]");
  }
  if (!(t_max > 0.0) || !(eps > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "solve_temperature: t_max and eps must be > 0");
  }
  if (gated.values.empty()) {
    throw Error(ErrorCode::kNoVisualTokens, "solve_temperature: no visual tokens");
  }

  TemperatureSolution sol;
  const bool constant =
      std::all_of(gated.values.begin(), gated.values.end(),
                  [&](double g) { return g == gated.values.front(); });
  if (gated.degenerate || constant) {
    sol.degenerate = true;
    sol.achieved_sharpness = sharpness_at(gated, 0.0);
    sol.clamped = std::abs(sol.achieved_sharpness - s_target) > eps;
    return sol;
  }

  const double s_low = sharpness_at(gated, 0.0);
  if (s_target <= s_low) {
    sol.achieved_sharpness = s_low;
    sol.clamped = s_low - s_target > eps;
    return sol;
  }
  const double s_high = sharpness_at(gated, t_max);
  if (s_high < s_target - eps) {
    sol.t_star = t_max;
    sol.achieved_sharpness = s_high;
    sol.clamped = true;
    return sol;
  }

  // Bracket invariant: S(lo) < s_target <= S(hi), up to eps at the top end.
  // The width floor of eps / 4 keeps the step count within
  // bisection_iteration_bound.
  const int cap = std::min(kMaxBisectionIterations,
                           bisection_iteration_bound(t_max, eps));
  double lo = 0.0, hi = t_max;
  double s_lo = s_low, s_hi = s_high;
  while (sol.iterations < cap) {
    const double mid = 0.5 * (lo + hi);
    const double s_mid = sharpness_at(gated, mid);
    ++sol.iterations;
    if (std::abs(s_mid - s_target) <= eps) {
      sol.t_star = mid;
      sol.achieved_sharpness = s_mid;
      return sol;
    }
    if (s_mid < s_target) {
      lo = mid;
      s_lo = s_mid;
    } else {
      hi = mid;
      s_hi = s_mid;
    }
    if (hi - lo <= 0.25 * eps) break;
  }

  // Bracket collapsed without meeting the residual: keep the closer endpoint.
  if (std::abs(s_hi - s_target) <= std::abs(s_lo - s_target)) {
    sol.t_star = hi;
    sol.achieved_sharpness = s_hi;
  } else {
    sol.t_star = lo;
    sol.achieved_sharpness = s_lo;
  }
  sol.clamped = std::abs(sol.achieved_sharpness - s_target) > eps;
  return sol;
}

double clamp_target_mass(double m_target) {
  if (std::isnan(m_target)) {
    throw Error(ErrorCode::kInvalidArgument, "target mass is NaN");
  }
  return std::clamp(m_target, kMinTargetMass, kMaxTargetMass);
}

double mass_shift_alpha(std::span<const double> e_t,
                        std::span<const double> e_v_tilde, double m_target) {
  if (e_t.empty()) {
    throw Error(ErrorCode::kEmptyInput, "mass_shift_alpha: empty text logits");
  }
  if (e_v_tilde.empty()) {
    throw Error(ErrorCode::kEmptyInput, "mass_shift_alpha: empty visual logits");
  }
  const double m = clamp_target_mass(m_target);
  return (std::log(m) - std::log1p(-m)) + log_sum_exp(e_t) -
         log_sum_exp(e_v_tilde);
}

std::vector<double> interpolate(std::span<const double> e_v,
                                std::span<const double> e_v_target,
                                double alpha_v) {
  if (e_v.size() != e_v_target.size()) {
    throw Error(ErrorCode::kLayoutMismatch,
                "interpolate: length mismatch (" + std::to_string(e_v.size()) +
                    " vs " + std::to_string(e_v_target.size()) + ")");
  }
  if (!(alpha_v > 0.0) || !std::isfinite(alpha_v)) {
    throw Error(ErrorCode::kInvalidArgument, "interpolate: alpha_v must be > 0");
  }
  // (1 - a) * e + a * t reproduces the target bit-exactly at a = 1.
  std::vector<double> out(e_v.size());
  for (std::size_t i = 0; i < e_v.size(); ++i) {
    out[i] = (1.0 - alpha_v) * e_v[i] + alpha_v * e_v_target[i];
  }
  return out;
}

VsmrResult apply_vsmr(std::span<const double> e_v, std::span<const double> e_t,
                      double m_target, double s_target,
                      const VsmrParams& params) {
  if (e_v.empty()) throw Error(ErrorCode::kNoVisualTokens, "apply_vsmr: no visual tokens");
  if (e_t.empty()) throw Error(ErrorCode::kEmptyInput, "apply_vsmr: no text tokens");
  require_finite(e_t, "text logits");

  const GatedVisualLogits gated = standardize_and_gate(e_v);

  VsmrResult result;
  result.temperature = solve_temperature(gated, std::clamp(s_target, 0.0, 1.0),
                                         params.t_max, params.eps);
  std::vector<double> sharpened(gated.values.size());
  for (std::size_t i = 0; i < sharpened.size(); ++i) {
    sharpened[i] = result.temperature.t_star * gated.values[i];
  }

  result.alpha_shift = mass_shift_alpha(e_t, sharpened, m_target);
  result.target_visual = std::move(sharpened);
  for (double& x : result.target_visual) x += result.alpha_shift;
  result.calibrated_visual =
      interpolate(e_v, result.target_visual, params.alpha_v);
  return result;
}

}  // namespace bair
