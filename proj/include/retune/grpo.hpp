#pragma once

#include <span>
#include <vector>

namespace retune {

struct GrpoConfig {
  double epsilon = 0.2;     // clip half-width
  double kl_coef = 0.001;   // beta
  double std_guard = 1e-8;  // groups with std below this get zero advantages
  friend bool operator==(const GrpoConfig&, const GrpoConfig&) = default;
};

void validate(const GrpoConfig& c);

/// (r_i - mean(r)) / std(r) with the population std; all zeros when std < std_guard.
std::vector<double> group_advantages(std::span<const double> rewards, double std_guard = 1e-8);

/// exp(current_lp - old_lp). Throws OverflowError when the result is not representable.
double ratio(double current_lp, double old_lp);

/// min(rho * adv, clip(rho, 1 - eps, 1 + eps) * adv).
double clipped_surrogate_from_ratio(double advantage, double rho, double epsilon);
double clipped_surrogate(double advantage, double current_lp, double old_lp, double epsilon);

/// Derivative of the clipped surrogate with respect to current_lp. Zero when the
/// clipped term is the active minimum; at the clip boundaries the unclipped branch wins.
double clipped_surrogate_grad(double advantage, double current_lp, double old_lp, double epsilon);

/// Per-token KL estimate exp(ref - cur) - (ref - cur) - 1, always >= 0.
double kl_penalty(double current_lp, double ref_lp);
double kl_penalty_grad(double current_lp, double ref_lp);

/// Per-response token log-probabilities: current[i], old[i], ref[i] all of length |o_i|.
struct TokenLogProbs {
  std::vector<std::vector<double>> current;
  std::vector<std::vector<double>> old;
  std::vector<std::vector<double>> ref;
};

struct RolloutGroup {
  std::vector<double> rewards;
  TokenLogProbs logprobs;
};

struct ObjectiveResult {
  std::vector<double> advantages;
  double objective = 0.0;
  std::vector<std::vector<double>> gradients;  // d objective / d current[i][t]
};

/// Throws ValidationError on shape mismatches, empty responses or G < 2, and
/// DomainError/OverflowError on values the objective cannot evaluate.
void validate(const RolloutGroup& group);

/// (1/G) sum_i (1/|o_i|) sum_t [surrogate(A_i, cur, old) - beta * kl(cur, ref)],
/// with the outcome advantage A_i broadcast to every token of response i.
ObjectiveResult group_objective(const RolloutGroup& group, const GrpoConfig& config);

}  // namespace retune
