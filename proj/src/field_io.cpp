#include "sigk/field_io.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigk/errors.hpp"

namespace sigk {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

void write_field_csv(const std::string& path, const ScalarField& u) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  const Grid& g = u.grid();
  std::vector<std::string> head;
  for (int a = 0; a < g.dim(); ++a) head.push_back(std::to_string(g.points()[a]));
  for (int a = 0; a < g.dim(); ++a) {
    head.push_back(fmt(g.box().lo[a]));
    head.push_back(fmt(g.box().hi[a]));
  }
  for (std::size_t i = 0; i < head.size(); ++i) out << (i ? "," : "") << head[i];
  out << '\n';
  for (double v : u.values()) out << fmt(v) << '\n';
}

ScalarField read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open field file " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": missing header row");
  std::vector<double> head;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      head.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError(path + ": malformed header cell '" + cell + "'");
    }
  }
  if (head.empty() || head.size() % 3 != 0) throw ConfigError(path + ": header must hold 3n numbers");
  const int n = static_cast<int>(head.size() / 3);
  std::vector<int> points(n);
  Box box{std::vector<double>(n), std::vector<double>(n)};
  for (int a = 0; a < n; ++a) {
    points[a] = static_cast<int>(head[a]);
    box.lo[a] = head[n + 2 * a];
    box.hi[a] = head[n + 2 * a + 1];
  }
  Grid grid(box, points);
  std::vector<double> values;
  values.reserve(grid.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw ConfigError(path + ": malformed value '" + line + "'");
    }
  }
  if (values.size() != grid.size()) throw ConfigError(path + ": value count does not match header");
  return ScalarField(grid, std::move(values));
}

void write_field_sidecar(const std::string& path, const ScalarField& u, const std::string& provenance) {
  const Grid& g = u.grid();
  nlohmann::json j;
  j["dim"] = g.dim();
  j["sizes"] = g.points();
  j["lo"] = g.box().lo;
  j["hi"] = g.box().hi;
  std::vector<double> h(g.dim());
  for (int a = 0; a < g.dim(); ++a) h[a] = g.spacing(a);
  j["spacing"] = h;
  j["provenance"] = provenance;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace sigk
