#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sigk/errors.hpp"
#include "sigk/moser.hpp"

using namespace sigk;

TEST_SUITE("moser") {
  TEST_CASE("rational literals") {
    CHECK(parse_rational("4") == Rational(4));
    CHECK(parse_rational("4.5") == Rational(9, 2));
    CHECK(parse_rational("9/2") == Rational(9, 2));
    CHECK(parse_rational("-0.25") == Rational(-1, 4));
    CHECK(to_string(Rational(9, 5)) == "9/5");
    CHECK(to_string(Rational(3)) == "3");
    CHECK_THROWS_AS((void)parse_rational("abc"), ConfigError);
    CHECK_THROWS_AS((void)parse_rational("1/0"), ConfigError);
    CHECK_THROWS_AS((void)parse_rational(""), ConfigError);
  }

  TEST_CASE("case names round trip") {
    for (ScheduleCase c : {ScheduleCase::kCase1, ScheduleCase::kCase2, ScheduleCase::kK2General,
                           ScheduleCase::kK3General}) {
      CHECK(schedule_case_from_string(to_string(c)) == c);
    }
    CHECK(schedule_case_from_string("k>=3-general") == ScheduleCase::kK3General);
    CHECK_THROWS_AS((void)schedule_case_from_string("case3"), ConfigError);
  }

  TEST_CASE("case1 with k = 2, n = 3, p = 4") {
    const MoserSchedule m = moser_schedule(2, 3, Rational(4), ScheduleCase::kCase1);
    CHECK(m.constants.beta == Rational(3, 2));
    CHECK(m.constants.decrement == 1);
    CHECK(m.q0 == Rational(3));
    CHECK(m.limit == Rational(1));
    CHECK(m.limit_positive());
    CHECK(m.sum_beta_inv == Rational(3));
    CHECK(m.sum_i_beta_inv == Rational(6));
    REQUIRE(m.q.size() >= 3);
    CHECK(m.q[1] == 3.5);
    CHECK(m.q[2] == 4.25);
  }

  TEST_CASE("gains for other dimensions and cases") {
    CHECK(schedule_constants(ScheduleCase::kCase1, 2, 4).beta == Rational(4, 3));
    CHECK(schedule_constants(ScheduleCase::kK3General, 3, 3).beta == Rational(9, 4));
    CHECK(schedule_constants(ScheduleCase::kCase2, 2, 3).beta == Rational(9, 5));
    CHECK(schedule_constants(ScheduleCase::kK2General, 2, 3).beta == Rational(9, 5));
    const MoserSchedule c2 = moser_schedule(2, 3, Rational(5), ScheduleCase::kCase2);
    CHECK(c2.limit == Rational(1, 2));
    CHECK(schedule_constants(ScheduleCase::kCase1, 2, 3).theta == Rational(1, 2));
  }

  TEST_CASE("threshold gates on p") {
    CHECK_THROWS_AS((void)moser_schedule(2, 3, Rational(3), ScheduleCase::kCase1), ThresholdError);
    CHECK_NOTHROW((void)moser_schedule(2, 3, Rational(7, 2), ScheduleCase::kCase1));
    CHECK_THROWS_AS((void)moser_schedule(2, 3, Rational(9, 2), ScheduleCase::kCase2), ThresholdError);
    CHECK_THROWS_AS((void)moser_schedule(2, 3, Rational(9, 2), ScheduleCase::kK2General), ThresholdError);
    CHECK_THROWS_AS((void)moser_schedule(3, 3, Rational(9), ScheduleCase::kK3General), ThresholdError);
    CHECK_NOTHROW((void)moser_schedule(3, 3, Rational(10), ScheduleCase::kK3General));
    CHECK_THROWS_AS((void)schedule_constants(ScheduleCase::kK2General, 3, 3), DomainError);
    CHECK_THROWS_AS((void)schedule_constants(ScheduleCase::kK3General, 2, 3), DomainError);
    CHECK_THROWS_AS((void)schedule_constants(ScheduleCase::kCase1, 4, 3), DomainError);
    CHECK_THROWS_AS((void)schedule_constants(ScheduleCase::kCase1, 2, 2), DomainError);
  }

  TEST_CASE("property: the limit exponent equals p minus the p threshold") {
    oracle::Gen gen(21);
    const ScheduleCase cases[] = {ScheduleCase::kCase1, ScheduleCase::kCase2, ScheduleCase::kK2General,
                                  ScheduleCase::kK3General};
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 3 + trial % 4;
      const ScheduleCase c = cases[trial % 4];
      const int k = c == ScheduleCase::kK2General ? 2 : (c == ScheduleCase::kK3General ? 3 + trial % (n - 2) : 2 + trial % (n - 1));
      const ScheduleConstants sc = schedule_constants(c, k, n);
      const Rational p = sc.p_threshold + Rational(1 + static_cast<int>(gen.uniform(0.0, 40.0)), 8);
      const MoserSchedule m = moser_schedule(k, n, p, c);
      CHECK(m.limit == p - sc.p_threshold);
      CHECK(m.constants.q_threshold * (m.constants.beta - 1) == Rational(m.constants.decrement));
    }
  }

  TEST_CASE("normalized exponents converge to the closed form by j = 60") {
    const MoserSchedule m = moser_schedule(2, 3, Rational(4), ScheduleCase::kCase1);
    // Exact rational recursion for small j.
    Rational q = m.q0, scale = 1;
    for (int j = 1; j <= 10; ++j) {
      q = m.constants.beta * q - m.constants.decrement;
      scale *= m.constants.beta;
      CHECK(m.normalized_closed(j) == doctest::Approx(to_double(q / scale)).epsilon(1e-14));
      CHECK(m.normalized_iterated(j) == doctest::Approx(to_double(q / scale)).epsilon(1e-14));
    }
    CHECK(std::abs(m.normalized_iterated(60) - to_double(m.limit)) <= 1e-9);
    CHECK(std::abs(m.normalized_closed(60) - to_double(m.limit)) <= 1e-9);
    for (ScheduleCase c : {ScheduleCase::kCase2, ScheduleCase::kK2General}) {
      const MoserSchedule s = moser_schedule(2, 3, Rational(5), c);
      CHECK(std::abs(s.normalized_iterated(60) - 0.5) <= 1e-9);
    }
  }

  TEST_CASE("schedule grows until 1e6 and serializes") {
    const MoserSchedule m = moser_schedule(2, 3, Rational(4), ScheduleCase::kCase1);
    CHECK(m.q.back() > 1e6);
    for (std::size_t j = 1; j < m.q.size(); ++j) CHECK(m.q[j] > m.q[j - 1]);
    const nlohmann::json j = to_json(m);
    CHECK(j["beta"] == "3/2");
    CHECK(j["case"] == "case1");
  }
}
