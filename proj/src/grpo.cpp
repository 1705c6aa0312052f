#include "retune/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "retune/errors.hpp"

namespace retune {

namespace {

// Largest x with exp(x) finite.
constexpr double kMaxExpArg = 709.782712893384;

double checked_exp(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite log-probability");
  if (x > kMaxExpArg) {
    throw OverflowError(std::string(what) + ": exp(" + std::to_string(x) + ") overflows a double");
  }
  return std::exp(x);
}

}  // namespace

void validate(const GrpoConfig& c) {
  if (!(c.epsilon > 0.0) || !std::isfinite(c.epsilon)) throw DomainError("grpo: epsilon must be > 0");
  if (!(c.kl_coef >= 0.0) || !std::isfinite(c.kl_coef)) throw DomainError("grpo: kl_coef must be >= 0");
  if (!(c.std_guard > 0.0) || !std::isfinite(c.std_guard)) throw DomainError("grpo: std_guard must be > 0");
}

std::vector<double> group_advantages(std::span<const double> rewards, double std_guard) {
  if (rewards.size() < 2) throw DomainError("group_advantages: group size must be at least 2");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) {
    if (!std::isfinite(r)) throw DomainError("group_advantages: non-finite reward");
    mean += r;
  }
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> adv(rewards.size(), 0.0);
  if (sd < std_guard) return adv;
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

double ratio(double current_lp, double old_lp) { return checked_exp(current_lp - old_lp, "ratio"); }

double clipped_surrogate_from_ratio(double advantage, double rho, double epsilon) {
  const double clipped = std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(rho * advantage, clipped * advantage);
}

double clipped_surrogate(double advantage, double current_lp, double old_lp, double epsilon) {
  return clipped_surrogate_from_ratio(advantage, ratio(current_lp, old_lp), epsilon);
}

double clipped_surrogate_grad(double advantage, double current_lp, double old_lp, double epsilon) {
  const double rho = ratio(current_lp, old_lp);
  const double clipped = std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon);
  // d(rho)/d(current_lp) = rho.
  return rho * advantage <= clipped * advantage ? rho * advantage : 0.0;
}

double kl_penalty(double current_lp, double ref_lp) {
  const double d = ref_lp - current_lp;
  return std::max(0.0, checked_exp(d, "kl_penalty") - d - 1.0);
}

double kl_penalty_grad(double current_lp, double ref_lp) {
  return 1.0 - checked_exp(ref_lp - current_lp, "kl_penalty");
}

void validate(const RolloutGroup& group) {
  const std::size_t g = group.rewards.size();
  if (g < 2) throw ValidationError("rollout group needs at least 2 responses");
  const auto& lp = group.logprobs;
  if (lp.current.size() != g || lp.old.size() != g || lp.ref.size() != g) {
    throw ValidationError("token log-probs must have one row per reward");
  }
  for (std::size_t i = 0; i < g; ++i) {
    const std::size_t len = lp.current[i].size();
    if (len == 0) throw ValidationError("response " + std::to_string(i) + " has no tokens");
    if (lp.old[i].size() != len || lp.ref[i].size() != len) {
      throw ValidationError("response " + std::to_string(i) + ": current/old/ref lengths differ");
    }
    for (std::size_t t = 0; t < len; ++t) {
      const double cur = lp.current[i][t], old = lp.old[i][t], ref = lp.ref[i][t];
      const std::string where = "response " + std::to_string(i) + " token " + std::to_string(t);
      if (!std::isfinite(cur) || !std::isfinite(old) || !std::isfinite(ref)) {
        throw DomainError(where + ": non-finite log-probability");
      }
      if (cur - old > kMaxExpArg || ref - cur > kMaxExpArg) {
        throw OverflowError(where + ": log-probability gap overflows exp()");
      }
    }
  }
  for (double r : group.rewards) {
    if (!std::isfinite(r)) throw DomainError("non-finite reward");
  }
}

ObjectiveResult group_objective(const RolloutGroup& group, const GrpoConfig& config) {
  validate(group);
  validate(config);
  ObjectiveResult out;
  out.advantages = group_advantages(group.rewards, config.std_guard);
  const auto& lp = group.logprobs;
  const std::size_t g = group.rewards.size();
  const double inv_g = 1.0 / static_cast<double>(g);
  out.gradients.resize(g);
  for (std::size_t i = 0; i < g; ++i) {
    const std::size_t len = lp.current[i].size();
    const double scale = inv_g / static_cast<double>(len);
    const double adv = out.advantages[i];
    double response_sum = 0.0;
    out.gradients[i].resize(len);
    for (std::size_t t = 0; t < len; ++t) {
      const double cur = lp.current[i][t], old = lp.old[i][t], ref = lp.ref[i][t];
      response_sum += clipped_surrogate(adv, cur, old, config.epsilon) - config.kl_coef * kl_penalty(cur, ref);
      out.gradients[i][t] = scale * (clipped_surrogate_grad(adv, cur, old, config.epsilon) -
                                     config.kl_coef * kl_penalty_grad(cur, ref));
    }
    out.objective += response_sum / static_cast<double>(len);
  }
  out.objective *= inv_g;
  return out;
}

}  // namespace retune
