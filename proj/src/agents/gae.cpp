#include "pentabot/gae.hpp"

#include "pentabot/errors.hpp"

namespace pentabot::agents {

GaeResult gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                         const std::vector<bool>& terminals, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n + 1 || terminals.size() != n) {
    throw RangeError("gae: need values.size() == rewards.size() + 1 == terminals.size() + 1");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = terminals[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * live * values[k + 1] - values[k];
    running = delta + gamma * lambda * live * running;
    out.advantages[k] = running;
    out.returns[k] = running + values[k];
  }
  return out;
}

}  // namespace pentabot::agents
