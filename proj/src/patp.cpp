#include "bair/patp.hpp"

#include <algorithm>
#include <cmath>

#include "bair/attention.hpp"
#include "bair/error.hpp"

namespace bair {

namespace {

// Mean taken around `origin` so a constant run yields exactly `origin`.
double mean_of(std::span<const double> xs, double origin) {
  double sum = 0.0;
  for (double x : xs) sum += x - origin;
  return origin + sum / static_cast<double>(xs.size());
}

void check_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction <= 0.5)) {
    throw Error(ErrorCode::kInvalidArgument,
                "boundary fraction must lie in (0, 0.5]");
  }
}

}  // namespace

std::size_t boundary_window(std::size_t length, double fraction) {
  check_fraction(fraction);
  // The slack absorbs products like 0.2 * 15 = 3.0000000000000004.
  const double raw = fraction * static_cast<double>(length);
  const auto window = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(window, 1, std::max<std::size_t>(length, 1));
}

RegionalMeans regional_means(std::span<const double> e_t, double fraction) {
  if (e_t.empty()) throw Error(ErrorCode::kEmptyInput, "regional_means: empty text logits");
  require_finite(e_t, "text logits");
  const std::size_t window = boundary_window(e_t.size(), fraction);
  RegionalMeans means;
  means.fraction = fraction;
  const double origin = e_t.front();
  means.global_mean = mean_of(e_t, origin);
  means.head_mean = mean_of(e_t.first(window), origin);
  means.tail_mean = mean_of(e_t.last(window), origin);
  return means;
}

PenaltyWeights penalty_weights(const RegionalMeans& means) {
  return {std::max(0.0, means.head_mean - means.global_mean),
          std::max(0.0, means.tail_mean - means.global_mean)};
}

double boundary_penalty(std::size_t j, std::size_t length,
                        const PenaltyWeights& weights) {
  const double pos = 2.0 * static_cast<double>(j) / static_cast<double>(length);
  const double prim = std::max(0.0, 1.0 - pos);
  const double rec = std::max(0.0, pos - 1.0);
  return weights.lambda_prim * prim * prim + weights.lambda_rec * rec * rec;
}

std::vector<double> apply_patp(std::span<const double> e_t,
                               const PenaltyWeights& weights) {
  if (weights.lambda_prim < 0.0 || weights.lambda_rec < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "penalty weights must be >= 0");
  }
  std::vector<double> out(e_t.begin(), e_t.end());
  for (std::size_t j = 1; j <= out.size(); ++j) {
    out[j - 1] -= boundary_penalty(j, out.size(), weights);
  }
  return out;
}

TextCalibration calibrate_text(std::span<const double> e_t, double fraction) {
  TextCalibration result;
  result.weights = penalty_weights(regional_means(e_t, fraction));
  result.logits = apply_patp(e_t, result.weights);
  return result;
}

}  // namespace bair
