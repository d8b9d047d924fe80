#pragma once

#include <string>
#include <vector>

#include <boost/rational.hpp>
#include <nlohmann/json.hpp>

namespace sigk {

using Rational = boost::rational<long long>;

enum class ScheduleCase {
  kCase1,      // H = H1 |xi|^2 I with H1 >= 0, p > kn/2
  kCase2,      // H = H2 I, p > (k+1)n/2
  kK2General,  // general H, k = 2, p > 3n/2
  kK3General,  // general H, 3 <= k <= n, p > kn
};

[[nodiscard]] std::string to_string(ScheduleCase c);
/// Accepts case1, case2, k2-general, k3-general and k>=3-general.
[[nodiscard]] ScheduleCase schedule_case_from_string(const std::string& s);

/// Exact decimal or fraction literal such as "4", "4.5", "9/2".
[[nodiscard]] Rational parse_rational(const std::string& s);
[[nodiscard]] double to_double(const Rational& r);
[[nodiscard]] std::string to_string(const Rational& r);

/// Iteration gain beta, the Sobolev-side theta and the per-step decrement d with q_j = beta q_{j-1} - d.
struct ScheduleConstants {
  Rational theta;
  Rational beta;
  int decrement = 0;
  /// Threshold on p.
  Rational p_threshold;
  /// Threshold on q for one reverse-Hoelder step: q > d / (beta - 1).
  Rational q_threshold;
};

/// Throws DomainError for (k, n) outside the case's range.
[[nodiscard]] ScheduleConstants schedule_constants(ScheduleCase c, int k, int n);

struct MoserSchedule {
  ScheduleCase which = ScheduleCase::kCase1;
  int k = 0;
  int n = 0;
  Rational p;
  ScheduleConstants constants;
  Rational q0;
  Rational limit;           // q0 - d / (beta - 1)
  std::vector<double> q;    // q_0, q_1, ... until q_j > 1e6
  Rational sum_i_beta_inv;  // sum_{i>=0} i beta^{-i} = beta / (beta - 1)^2
  Rational sum_beta_inv;    // sum_{i>=0} beta^{-i} = beta / (beta - 1)

  [[nodiscard]] bool limit_positive() const { return limit > 0; }
  /// q_j / beta^j by iterating the recursion.
  [[nodiscard]] double normalized_iterated(int j) const;
  /// Closed form q0 - d (1 - beta^{-j}) / (beta - 1).
  [[nodiscard]] double normalized_closed(int j) const;
};

/// Throws ThresholdError when p is at or below the case threshold.
[[nodiscard]] MoserSchedule moser_schedule(int k, int n, const Rational& p, ScheduleCase c);

[[nodiscard]] nlohmann::json to_json(const MoserSchedule& s);

}  // namespace sigk
