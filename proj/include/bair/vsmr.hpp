#pragma once

#include <span>
#include <vector>

namespace bair {

// Standardized, SiLU-gated visual logits.
struct GatedVisualLogits {
  std::vector<double> values;
  double source_mean = 0.0;
  double source_std = 0.0;
  // Zero variance input; values are all zero.
  bool degenerate = false;
};

struct TemperatureSolution {
  double t_star = 0.0;
  int iterations = 0;
  double achieved_sharpness = 0.0;
  // Target not reached within eps on [0, t_max].
  bool clamped = false;
  // Gated vector was constant; no temperature search was run.
  bool degenerate = false;
};

struct VsmrResult {
  std::vector<double> calibrated_visual;
  std::vector<double> target_visual;
  double alpha_shift = 0.0;
  TemperatureSolution temperature;
};

struct VsmrParams {
  double alpha_v = 0.5;
  double t_max = 100.0;
  double eps = 1e-4;
};

inline constexpr double kMinTargetMass = 1e-6;
inline constexpr double kMaxTargetMass = 1.0 - 1e-6;
inline constexpr int kMaxBisectionIterations = 200;

// x * sigmoid(x) has its global minimum here.
inline constexpr double kSiluMinimum = -0.27846454276107379;

double silu(double x);

GatedVisualLogits standardize_and_gate(std::span<const double> visual_logits);

// Visual sharpness of softmax(t * g).
double sharpness_at(const GatedVisualLogits& gated, double t);

// Hard upper bound on bisection steps for a given bracket and tolerance.
int bisection_iteration_bound(double t_max, double eps);

// Bisection for S(T) = s_target on [0, t_max]. S is non-decreasing in T.
TemperatureSolution solve_temperature(const GatedVisualLogits& gated,
                                      double s_target, double t_max, double eps);

double clamp_target_mass(double m_target);

// Shift that gives softmax(concat(e_v_tilde + alpha, e_t)) visual mass m_target.
double mass_shift_alpha(std::span<const double> e_t,
                        std::span<const double> e_v_tilde, double m_target);

std::vector<double> interpolate(std::span<const double> e_v,
                                std::span<const double> e_v_target,
                                double alpha_v);

// Full visual recovery: gate, match sharpness, restore mass, interpolate.
// `e_t` is every non-visual logit that shares the softmax.
VsmrResult apply_vsmr(std::span<const double> e_v, std::span<const double> e_t,
                      double m_target, double s_target, const VsmrParams& params);

}  // namespace bair
