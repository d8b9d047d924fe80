#include "sigk/moser.hpp"

#include <cmath>
#include <cstdlib>

#include "sigk/errors.hpp"

namespace sigk {

std::string to_string(ScheduleCase c) {
  switch (c) {
    case ScheduleCase::kCase1: return "case1";
    case ScheduleCase::kCase2: return "case2";
    case ScheduleCase::kK2General: return "k2-general";
    case ScheduleCase::kK3General: return "k3-general";
  }
  return "?";
}

ScheduleCase schedule_case_from_string(const std::string& s) {
  if (s == "case1") return ScheduleCase::kCase1;
  if (s == "case2") return ScheduleCase::kCase2;
  if (s == "k2-general") return ScheduleCase::kK2General;
  if (s == "k3-general" || s == "k>=3-general") return ScheduleCase::kK3General;
  throw ConfigError("unknown schedule case '" + s + "'");
}

Rational parse_rational(const std::string& s) {
  if (s.empty()) throw ConfigError("empty number");
  const auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      const long long num = std::stoll(s.substr(0, slash));
      const long long den = std::stoll(s.substr(slash + 1));
      if (den == 0) throw ConfigError("zero denominator in '" + s + "'");
      return Rational(num, den);
    }
    std::size_t pos = 0;
    bool neg = false;
    if (s[pos] == '-' || s[pos] == '+') neg = s[pos++] == '-';
    long long num = 0, den = 1;
    bool dot = false, any = false;
    for (; pos < s.size(); ++pos) {
      const char c = s[pos];
      if (c == '.' && !dot) {
        dot = true;
      } else if (c >= '0' && c <= '9') {
        if (num > 100000000000000LL) throw ConfigError("too many digits in '" + s + "'");
        num = num * 10 + (c - '0');
        if (dot) den *= 10;
        any = true;
      } else {
        throw ConfigError("malformed number '" + s + "'");
      }
    }
    if (!any) throw ConfigError("malformed number '" + s + "'");
    return Rational(neg ? -num : num, den);
  } catch (const std::logic_error&) {
    throw ConfigError("malformed number '" + s + "'");
  }
}

double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

ScheduleConstants schedule_constants(ScheduleCase c, int k, int n) {
  if (n < 3) throw DomainError("schedules are defined for n >= 3");
  if (k < 2 || k > n) throw DomainError("schedules need 2 <= k <= n");
  ScheduleConstants s;
  switch (c) {
    case ScheduleCase::kCase1:
      s.theta = Rational(4, k * n + 2);
      s.beta = Rational(k * n, k * n + 2 - 2 * k);
      s.decrement = k - 1;
      s.p_threshold = Rational(k * n, 2);
      break;
    case ScheduleCase::kK2General:
      if (k != 2) throw DomainError("k2-general schedule needs k = 2");
      [[fallthrough]];
    case ScheduleCase::kCase2:
      s.theta = Rational(4, (k + 1) * n + 2);
      s.beta = Rational((k + 1) * n, (k + 1) * n + 2 - 2 * (k + 1));
      s.decrement = k;
      s.p_threshold = Rational((k + 1) * n, 2);
      break;
    case ScheduleCase::kK3General:
      if (k < 3) throw DomainError("k3-general schedule needs 3 <= k <= n");
      s.theta = Rational(2, k * n + 1);
      s.beta = Rational(k * n, k * n + 1 - 2 * k);
      s.decrement = 2 * k - 1;
      s.p_threshold = Rational(k * n);
      break;
  }
  s.q_threshold = Rational(s.decrement) / (s.beta - 1);
  return s;
}

MoserSchedule moser_schedule(int k, int n, const Rational& p, ScheduleCase c) {
  MoserSchedule m;
  m.which = c;
  m.k = k;
  m.n = n;
  m.p = p;
  m.constants = schedule_constants(c, k, n);
  if (!(p > m.constants.p_threshold)) {
    throw ThresholdError(to_string(c) + " needs p > " + to_string(m.constants.p_threshold) + ", got " +
                         to_string(p));
  }
  const Rational& beta = m.constants.beta;
  const int d = m.constants.decrement;
  m.q0 = p - d;
  m.limit = m.q0 - Rational(d) / (beta - 1);
  m.sum_i_beta_inv = beta / ((beta - 1) * (beta - 1));
  m.sum_beta_inv = beta / (beta - 1);
  const double b = to_double(beta);
  double q = to_double(m.q0);
  m.q.push_back(q);
  for (int j = 0; j < 100000 && q <= 1e6; ++j) {
    const double next = b * q - d;
    if (!(next > q)) break;  // nonincreasing schedule: report what exists
    q = next;
    m.q.push_back(q);
  }
  return m;
}

double MoserSchedule::normalized_iterated(int j) const {
  const double b = to_double(constants.beta);
  double q = to_double(q0);
  double scale = 1.0;
  for (int i = 0; i < j; ++i) {
    q = b * q - constants.decrement;
    scale *= b;
  }
  return q / scale;
}

double MoserSchedule::normalized_closed(int j) const {
  const double b = to_double(constants.beta);
  return to_double(q0) - constants.decrement * (1.0 - std::pow(b, -j)) / (b - 1.0);
}

nlohmann::json to_json(const MoserSchedule& s) {
  nlohmann::json j;
  j["case"] = to_string(s.which);
  j["k"] = s.k;
  j["n"] = s.n;
  j["p"] = to_string(s.p);
  j["theta"] = to_string(s.constants.theta);
  j["beta"] = to_string(s.constants.beta);
  j["beta_value"] = to_double(s.constants.beta);
  j["decrement"] = s.constants.decrement;
  j["p_threshold"] = to_string(s.constants.p_threshold);
  j["q_threshold"] = to_string(s.constants.q_threshold);
  j["q0"] = to_string(s.q0);
  j["limit"] = to_string(s.limit);
  j["limit_value"] = to_double(s.limit);
  j["limit_positive"] = s.limit_positive();
  j["q"] = s.q;
  j["sum_i_beta_inv"] = to_string(s.sum_i_beta_inv);
  j["sum_beta_inv"] = to_string(s.sum_beta_inv);
  return j;
}

}  // namespace sigk
