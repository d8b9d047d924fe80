#include "sigk/report.hpp"

#include <cmath>

namespace sigk {

double observed_order(double h1, double e1, double h2, double e2) {
  return std::log(e1 / e2) / std::log(h1 / h2);
}

std::optional<double> min_observed_order(const std::vector<Level>& levels, double floor) {
  std::optional<double> best;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    const Level& a = levels[i];
    const Level& b = levels[i + 1];
    if (!(a.residual > floor) || !(b.residual > floor)) continue;
    const double p = observed_order(a.h, a.residual, b.h, b.residual);
    if (!best || p < *best) best = p;
  }
  return best;
}

namespace {

nlohmann::json number_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

}  // namespace

nlohmann::json to_json(const CheckReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["reference"] = r.reference;
  j["kind"] = r.kind;
  j["levels"] = nlohmann::json::array();
  for (const Level& l : r.levels) {
    j["levels"].push_back({{"h", number_or_null(l.h)},
                           {"lhs", number_or_null(l.lhs)},
                           {"rhs", number_or_null(l.rhs)},
                           {"residual", number_or_null(l.residual)}});
  }
  j["observed_order"] = r.observed_order ? number_or_null(*r.observed_order) : nlohmann::json(nullptr);
  j["implied_constant"] =
      r.implied_constant ? number_or_null(*r.implied_constant) : nlohmann::json(nullptr);
  j["pass"] = r.pass;
  for (auto it = r.details.begin(); it != r.details.end(); ++it) j[it.key()] = it.value();
  return j;
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

}  // namespace sigk
