#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pentabot::scaling {

/// Base electromagnet and its replacement. All fields must be positive.
struct ScalingQuery {
  double base_moment = 1.0;   // m0, A*m^2
  double base_radius = 1.0;   // r0, m
  double base_payload = 8e-4;  // kg, carried for reporting only
  double new_moment = 1.0;    // m0', A*m^2
};

/// r0' = r0 * (m0'/m0)^(2/7). Throws DomainError on non-positive inputs.
double scaled_radius(const ScalingQuery& query);

/// (m0'/m0)^(2/7).
double radius_ratio(double moment_ratio);

/// m^2 / r^7 with unit proportionality constant.
double acceleration_scale(double moment, double radius);

/// A published scenario; every value is a quoted string, never recomputed.
struct QuotedScenario {
  std::string name;
  std::string volume;
  std::string payload;
};

inline constexpr const char* kQuotedLabel = "paper-quoted — not independently derivable from published inputs";

struct ScenarioTable {
  QuotedScenario base;
  std::vector<QuotedScenario> scenarios;
  std::vector<double> moment_ratios;  // user-supplied, with computed radius ratios
};

ScenarioTable report_paper_scenarios(const std::vector<double>& moment_ratios = {});

void write_table(std::ostream& out, const ScenarioTable& table);
void write_csv(std::ostream& out, const ScenarioTable& table);

}  // namespace pentabot::scaling
