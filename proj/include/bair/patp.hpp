#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bair {

struct RegionalMeans {
  double global_mean = 0.0;
  double head_mean = 0.0;
  double tail_mean = 0.0;
  double fraction = 0.2;
};

struct PenaltyWeights {
  double lambda_prim = 0.0;
  double lambda_rec = 0.0;
};

inline constexpr double kDefaultBoundaryFraction = 0.2;

// Tokens in each boundary window: ceil(fraction * length), at least one.
std::size_t boundary_window(std::size_t length, double fraction);

RegionalMeans regional_means(std::span<const double> e_t, double fraction);

PenaltyWeights penalty_weights(const RegionalMeans& means);

// Quadratic penalty subtracted from text token j (1-based) of `length`.
double boundary_penalty(std::size_t j, std::size_t length,
                        const PenaltyWeights& weights);

std::vector<double> apply_patp(std::span<const double> e_t,
                               const PenaltyWeights& weights);

struct TextCalibration {
  std::vector<double> logits;
  PenaltyWeights weights;
};

TextCalibration calibrate_text(std::span<const double> e_t, double fraction);

}  // namespace bair
