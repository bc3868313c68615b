#include "pentabot/scaling.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "pentabot/errors.hpp"

namespace pentabot::scaling {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

}  // namespace

double radius_ratio(double moment_ratio) {
  require_positive(moment_ratio, "dipole ratio");
  // Through log2 so powers of two come out exact (128 -> 4).
  return std::exp2(2.0 * std::log2(moment_ratio) / 7.0);
}

double scaled_radius(const ScalingQuery& q) {
  require_positive(q.base_moment, "base dipole strength");
  require_positive(q.base_radius, "base radius");
  require_positive(q.new_moment, "new dipole strength");
  require_positive(q.base_payload, "base payload");
  return q.base_radius * radius_ratio(q.new_moment / q.base_moment);
}

double acceleration_scale(double moment, double radius) {
  require_positive(moment, "dipole strength");
  require_positive(radius, "radius");
  return moment * moment / std::pow(radius, 7.0);
}

ScenarioTable report_paper_scenarios(const std::vector<double>& moment_ratios) {
  for (double r : moment_ratios) require_positive(r, "dipole ratio");
  ScenarioTable t;
  t.base = {"desk prototype", "3.5 cm³", "0.8 g"};
  t.scenarios = {
      {"large lift", "(1.1 m)³", "26.2 kg"},
      {"tokamak coils", "(27.3 m)³", "3.8 × 10⁵ kg"},
  };
  t.moment_ratios = moment_ratios;
  return t;
}

void write_table(std::ostream& out, const ScenarioTable& t) {
  char buf[256];
  out << "Quoted scenarios (" << kQuotedLabel << ")\n";
  std::snprintf(buf, sizeof buf, "  %-16s %-16s %s\n", "scenario", "volume", "payload");
  out << buf;
  auto row = [&](const QuotedScenario& s) {
    // Padding by bytes would misalign the UTF-8 superscripts, so pad by hand.
    out << "  " << s.name << std::string(s.name.size() < 17 ? 17 - s.name.size() : 1, ' ') << s.volume;
    const std::size_t shown = s.volume.size() - (s.volume.find("³") != std::string::npos ? 1 : 0);
    out << std::string(shown < 17 ? 17 - shown : 1, ' ') << s.payload << "\n";
  };
  row(t.base);
  for (const auto& s : t.scenarios) row(s);
  if (!t.moment_ratios.empty()) {
    out << "\nRadius scaling r0'/r0 = (m0'/m0)^(2/7)\n";
    std::snprintf(buf, sizeof buf, "  %-16s %s\n", "m0'/m0", "r0'/r0");
    out << buf;
    for (double r : t.moment_ratios) {
      std::snprintf(buf, sizeof buf, "  %-16.10g %.10g\n", r, radius_ratio(r));
      out << buf;
    }
  }
}

void write_csv(std::ostream& out, const ScenarioTable& t) {
  out << "kind,name,volume,payload,moment_ratio,radius_ratio,label\n";
  auto quoted = [&](const QuotedScenario& s) {
    out << "quoted," << s.name << "," << s.volume << "," << s.payload << ",,," << kQuotedLabel << "\n";
  };
  quoted(t.base);
  for (const auto& s : t.scenarios) quoted(s);
  char buf[128];
  for (double r : t.moment_ratios) {
    std::snprintf(buf, sizeof buf, "computed,,,,%.17g,%.17g,\n", r, radius_ratio(r));
    out << buf;
  }
}

}  // namespace pentabot::scaling
