#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include "pentabot/errors.hpp"
#include "pentabot/magnetics.hpp"
#include "pentabot/stability.hpp"

namespace pentabot::stability {

Vec3 RegionMap::cell_center(int ix, int iy, int iz) const {
  Vec3 c = domain.min;
  c.x() += (ix + 0.5) * resolution;
  c.y() += (iy + 0.5) * resolution;
  if (dims == 3) c.z() += (iz + 0.5) * resolution;
  return c;
}

std::size_t RegionMap::controllable_count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

std::vector<std::vector<double>> make_current_grid(const SceneConfig& scene, int steps) {
  if (steps < 1) throw DomainError("current grid needs at least one step per coil");
  const std::size_t n = scene.coils.size();
  std::vector<std::vector<double>> levels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = scene.coils[i];
    for (int s = 0; s < steps; ++s) {
      levels[i].push_back(steps == 1 ? c.current_max
                                     : c.current_min + (c.current_max - c.current_min) * s / (steps - 1));
    }
  }
  std::vector<std::vector<double>> grid;
  std::vector<int> idx(n, 0);
  while (true) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = levels[i][idx[i]];
    grid.push_back(std::move(v));
    std::size_t k = 0;
    while (k < n && ++idx[k] == steps) idx[k++] = 0;
    if (k == n) break;
  }
  return grid;
}

namespace {

int cells_along(double extent, double resolution) {
  // Guard against 0.3 / 0.01 landing a hair above 30.
  return static_cast<int>(std::ceil(extent / resolution - 1e-9));
}

}  // namespace

RegionMap scan_controllable_region(const SceneConfig& scene, const std::vector<std::vector<double>>& current_grid,
                                   const Box& domain, double resolution, const ScanOptions& options) {
  if (!(resolution > 0.0)) throw DomainError("scan resolution must be positive");
  if (current_grid.empty()) throw DomainError("current grid is empty");
  for (const auto& v : current_grid) magnetics::check_currents(scene, v);

  RegionMap map;
  map.dims = scene.spatial_dims();
  map.domain = domain;
  map.resolution = resolution;
  const Vec3 ext = domain.extent();
  map.nx = cells_along(ext.x(), resolution);
  map.ny = cells_along(ext.y(), resolution);
  map.nz = map.dims == 3 ? cells_along(ext.z(), resolution) : 1;
  if (map.nx <= 0 || map.ny <= 0 || map.nz <= 0) throw DomainError("scan domain is empty");
  map.cells.assign(static_cast<std::size_t>(map.nx) * map.ny * map.nz, 0);
  map.scene_hash = scene_hash(scene);
  map.current_vectors = current_grid.size();
  map.steps_per_coil = options.steps_per_coil;
  map.tolerance = options.tolerance_fraction * scene.actuator.mass * scene.gravity.norm();

  const Vec3 weight = scene.actuator.mass * scene.gravity;
  const double tol = map.tolerance;
  auto evaluate = [&](std::size_t cell) {
    const int ix = static_cast<int>(cell % map.nx);
    const int iy = static_cast<int>((cell / map.nx) % map.ny);
    const int iz = static_cast<int>(cell / (static_cast<std::size_t>(map.nx) * map.ny));
    const Vec3 p = map.cell_center(ix, iy, iz);
    if (magnetics::nearest_coil_distance(scene, p) < kCoilExclusionRadius) return;
    for (const auto& currents : current_grid) {
      if ((magnetics::actuator_force(scene, currents, p) + weight).norm() < tol) {
        map.cells[cell] = 1;
        return;
      }
    }
  };

  unsigned workers = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t total = map.cells.size();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, total));
  if (workers <= 1) {
    for (std::size_t c = 0; c < total; ++c) evaluate(c);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < total; c += workers) evaluate(c);
      });
    }
  }
  return map;
}

double region_area(const RegionMap& map) {
  return static_cast<double>(map.controllable_count()) * std::pow(map.resolution, map.dims);
}

void write_region(std::ostream& out, const RegionMap& map) {
  char buf[256];
  out << "pentabot-region 1\n";
  out << "dims " << map.dims << '\n';
  std::snprintf(buf, sizeof buf, "domain_min %.17g %.17g %.17g\n", map.domain.min.x(), map.domain.min.y(),
                map.domain.min.z());
  out << buf;
  std::snprintf(buf, sizeof buf, "domain_max %.17g %.17g %.17g\n", map.domain.max.x(), map.domain.max.y(),
                map.domain.max.z());
  out << buf;
  std::snprintf(buf, sizeof buf, "resolution %.17g\n", map.resolution);
  out << buf;
  out << "shape " << map.nx << ' ' << map.ny << ' ' << map.nz << '\n';
  std::snprintf(buf, sizeof buf, "scene_hash %016llx\n", static_cast<unsigned long long>(map.scene_hash));
  out << buf;
  out << "current_vectors " << map.current_vectors << '\n';
  out << "steps_per_coil " << map.steps_per_coil << '\n';
  std::snprintf(buf, sizeof buf, "tolerance %.17g\n", map.tolerance);
  out << buf;
  out << "cells\n";
  for (int iz = 0; iz < map.nz; ++iz) {
    for (int iy = 0; iy < map.ny; ++iy) {
      for (int ix = 0; ix < map.nx; ++ix) out << (map.at(ix, iy, iz) ? '1' : '0');
      out << '\n';
    }
  }
}

RegionMap read_region(std::istream& in) {
  RegionMap map;
  std::string line, key;
  auto expect = [&](const char* name) -> std::istringstream {
    if (!std::getline(in, line)) throw ConfigError(std::string("region file truncated before ") + name);
    std::istringstream ss(line);
    ss >> key;
    if (key != name) throw ConfigError("region file: expected '" + std::string(name) + "', got '" + key + "'");
    return ss;
  };
  {
    auto ss = expect("pentabot-region");
    int version = 0;
    ss >> version;
    if (version != 1) throw ConfigError("unsupported region file version");
  }
  expect("dims") >> map.dims;
  {
    auto ss = expect("domain_min");
    ss >> map.domain.min.x() >> map.domain.min.y() >> map.domain.min.z();
  }
  {
    auto ss = expect("domain_max");
    ss >> map.domain.max.x() >> map.domain.max.y() >> map.domain.max.z();
  }
  expect("resolution") >> map.resolution;
  {
    auto ss = expect("shape");
    ss >> map.nx >> map.ny >> map.nz;
  }
  {
    auto ss = expect("scene_hash");
    std::string hex;
    ss >> hex;
    map.scene_hash = std::stoull(hex, nullptr, 16);
  }
  expect("current_vectors") >> map.current_vectors;
  expect("steps_per_coil") >> map.steps_per_coil;
  expect("tolerance") >> map.tolerance;
  expect("cells");
  if (!(map.resolution > 0.0) || map.nx <= 0 || map.ny <= 0 || map.nz <= 0) {
    throw ConfigError("region file has an invalid grid");
  }
  map.cells.assign(static_cast<std::size_t>(map.nx) * map.ny * map.nz, 0);
  for (int row = 0; row < map.ny * map.nz; ++row) {
    if (!std::getline(in, line) || static_cast<int>(line.size()) != map.nx) {
      throw ConfigError("region file row " + std::to_string(row) + " is malformed");
    }
    for (int ix = 0; ix < map.nx; ++ix) {
      if (line[ix] != '0' && line[ix] != '1') throw ConfigError("region file cell is not 0/1");
      map.cells[static_cast<std::size_t>(row) * map.nx + ix] = line[ix] == '1';
    }
  }
  return map;
}

void write_region_csv(std::ostream& out, const RegionMap& map) {
  out << (map.dims == 3 ? "x,y,z\n" : "x,y\n");
  char buf[96];
  for (int iz = 0; iz < map.nz; ++iz) {
    for (int iy = 0; iy < map.ny; ++iy) {
      for (int ix = 0; ix < map.nx; ++ix) {
        if (!map.at(ix, iy, iz)) continue;
        const Vec3 c = map.cell_center(ix, iy, iz);
        if (map.dims == 3) {
          std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", c.x(), c.y(), c.z());
        } else {
          std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", c.x(), c.y());
        }
        out << buf;
      }
    }
  }
}

}  // namespace pentabot::stability
