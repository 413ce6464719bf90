#include "interceptsim/cost_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "interceptsim/trace_io.hpp"
#include "interceptsim/workload.hpp"

namespace icept {

using nlohmann::json;

void CostModel::validate() const {
  if (t0 < 0.0) throw ConfigError("cost model: t0 must be >= 0");
  if (!(slope_below > 0.0)) throw ConfigError("cost model: slope_below must be > 0");
  if (slope_above < slope_below) throw ConfigError("cost model: slope_above must be >= slope_below");
  if (!(saturation_point > 0.0)) throw ConfigError("cost model: saturation_point must be > 0");
  if (!(swap_per_token > 0.0)) throw ConfigError("cost model: swap_per_token must be > 0");
  if (!(mem_per_token > 0.0)) throw ConfigError("cost model: mem_per_token must be > 0");
  if (!(gpu_kv_capacity > 0.0) || !(cpu_kv_capacity > 0.0))
    throw ConfigError("cost model: capacities must be > 0");
  if (block_size < 1) throw ConfigError("cost model: block_size must be >= 1");
  if (swap_launch_overhead < 0.0) throw ConfigError("cost model: swap_launch_overhead must be >= 0");
}

namespace {

// Least squares of y ~ a + b*min(x,S) + c*max(x-S,0) for a fixed knee.
// Returns false when the normal equations are singular (e.g. no point above
// the knee); the caller falls back to a single line.
bool solve_three(const std::vector<std::pair<double, double>>& pts, double knee, FwdFit& out) {
  std::array<std::array<double, 3>, 3> ata{};
  std::array<double, 3> aty{};
  for (const auto& [x, y] : pts) {
    const std::array<double, 3> row = {1.0, std::min(x, knee), std::max(x - knee, 0.0)};
    for (int i = 0; i < 3; ++i) {
      aty[i] += row[i] * y;
      for (int j = 0; j < 3; ++j) ata[i][j] += row[i] * row[j];
    }
  }
  // Gaussian elimination with partial pivoting.
  std::array<std::array<double, 4>, 3> m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = ata[i][j];
    m[i][3] = aty[i];
  }
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    if (std::abs(m[pivot][col]) < 1e-12) return false;
    std::swap(m[col], m[pivot]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int j = col; j < 4; ++j) m[r][j] -= f * m[col][j];
    }
  }
  out.t0 = m[0][3] / m[0][0];
  out.slope_below = m[1][3] / m[1][1];
  out.slope_above = m[2][3] / m[2][2];
  out.saturation_point = knee;
  return true;
}

bool solve_line(const std::vector<std::pair<double, double>>& pts, double& a, double& b) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(pts.size());
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-12) return false;
  b = (n * sxy - sx * sy) / det;
  a = (sy - b * sx) / n;
  return true;
}

double sse_of(const std::vector<std::pair<double, double>>& pts, const FwdFit& f) {
  double sse = 0.0;
  for (const auto& [x, y] : pts) {
    const double pred = f.t0 + f.slope_below * std::min(x, f.saturation_point) +
                        f.slope_above * std::max(x - f.saturation_point, 0.0);
    sse += (pred - y) * (pred - y);
  }
  return sse;
}

}  // namespace

FwdFit fit_profile(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 4) throw FitError("need at least 4 profile points");
  std::set<double> xs;
  for (const auto& [x, y] : points) {
    if (!std::isfinite(x) || !std::isfinite(y) || x < 0.0) throw FitError("non-finite or negative profile point");
    xs.insert(x);
  }
  if (xs.size() < 2) throw FitError("all profile points share one batch size");

  bool found = false;
  FwdFit best;
  // Candidate knees are the observed batch sizes with at least two distinct
  // x values at or below them (the left segment needs its own slope).
  std::size_t seen = 0;
  for (double knee : xs) {
    ++seen;
    if (seen < 2) continue;
    FwdFit f;
    bool ok = solve_three(points, knee, f);
    if (!ok) {
      // No information above the knee: single line with slope_above mirrored.
      double a, b;
      if (!solve_line(points, a, b)) continue;
      f.t0 = a;
      f.slope_below = f.slope_above = b;
      f.saturation_point = knee;
    }
    f.sse = sse_of(points, f);
    if (!found || f.sse < best.sse - 1e-18 ||
        (std::abs(f.sse - best.sse) <= 1e-18 && knee > best.saturation_point)) {
      best = f;
      found = true;
    }
  }
  if (!found) throw FitError("degenerate profile data");
  return best;
}

std::vector<std::pair<double, double>> load_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::pair<double, double>> pts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x, y;
    if (!(ss >> x >> y)) {
      if (lineno == 1) continue;  // header
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected `batch_tokens,seconds`");
    }
    pts.emplace_back(x, y);
  }
  return pts;
}

std::string cost_model_to_json(const CostModel& m) {
  json j;
  j["t0"] = m.t0;
  j["slope_below"] = m.slope_below;
  j["slope_above"] = m.slope_above;
  j["saturation_point"] = m.saturation_point;
  j["swap_per_token"] = m.swap_per_token;
  j["mem_per_token"] = m.mem_per_token;
  j["gpu_kv_capacity"] = m.gpu_kv_capacity;
  j["cpu_kv_capacity"] = m.cpu_kv_capacity;
  j["block_size"] = m.block_size;
  j["swap_launch_overhead"] = m.swap_launch_overhead;
  return j.dump(2);
}

CostModel cost_model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("cost model JSON: ") + e.what());
  }
  CostModel m;
  try {
    if (j.contains("t0")) m.t0 = j["t0"].get<double>();
    if (j.contains("slope_below")) m.slope_below = j["slope_below"].get<double>();
    if (j.contains("slope_above")) m.slope_above = j["slope_above"].get<double>();
    if (j.contains("saturation_point")) m.saturation_point = j["saturation_point"].get<double>();
    if (j.contains("swap_per_token")) m.swap_per_token = j["swap_per_token"].get<double>();
    if (j.contains("mem_per_token")) m.mem_per_token = j["mem_per_token"].get<double>();
    if (j.contains("gpu_kv_capacity")) m.gpu_kv_capacity = j["gpu_kv_capacity"].get<double>();
    if (j.contains("cpu_kv_capacity")) m.cpu_kv_capacity = j["cpu_kv_capacity"].get<double>();
    if (j.contains("block_size")) m.block_size = j["block_size"].get<int>();
    if (j.contains("swap_launch_overhead")) m.swap_launch_overhead = j["swap_launch_overhead"].get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("cost model JSON: ") + e.what());
  }
  m.validate();
  return m;
}

CostModel load_cost_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return cost_model_from_json(ss.str());
}

void save_cost_model(const CostModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << cost_model_to_json(m) << '\n';
}

}  // namespace icept
