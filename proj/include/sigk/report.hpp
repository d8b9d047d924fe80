#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sigk {

struct Level {
  double h = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

/// Outcome of one verification. Probes report implied constants and only assert sign conditions.
struct CheckReport {
  std::string name;
  std::string reference;
  std::string kind = "check";
  std::vector<Level> levels;
  std::optional<double> observed_order;
  std::optional<double> implied_constant;
  bool pass = false;
  nlohmann::json details = nlohmann::json::object();
};

/// log(e1/e2) / log(h1/h2).
[[nodiscard]] double observed_order(double h1, double e1, double h2, double e2);
/// Minimum order over consecutive levels using the residual column. Levels whose residual is below
/// `floor` are treated as exact and skipped; returns nullopt when fewer than two levels remain.
[[nodiscard]] std::optional<double> min_observed_order(const std::vector<Level>& levels, double floor);

nlohmann::json to_json(const CheckReport& r);

/// Neumaier-compensated running sum; accumulation order is the call order.
class CompensatedSum {
 public:
  void add(double x);
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace sigk
