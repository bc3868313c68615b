// Regenerates the frozen region maps: make_golden <dir>.
#include <cstdio>
#include <fstream>

#include "region_cases.hpp"

using namespace pentabot;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_golden <dir>\n");
    return 2;
  }
  for (auto c : {test::RegionCase::kOpposing, test::RegionCase::kSamePolarity, test::RegionCase::kDoubledCurrent}) {
    const auto map = test::scan_case(c);
    std::ofstream out(std::string(argv[1]) + "/" + test::golden_name(c));
    stability::write_region(out, map);
    std::printf("%s: %zu cells, area %.6g m^2\n", test::golden_name(c).c_str(), map.controllable_count(),
                stability::region_area(map));
  }
  return 0;
}
