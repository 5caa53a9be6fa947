#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "arlab/optimizers.hpp"

using namespace arlab;

TEST_CASE("constant and adaptive steps") {
  CHECK(lr_step(LrRule::constant(0.3), 7.0) == 0.3);
  CHECK(lr_step(LrRule::adaptive(2.0, 4.0), 0.5) == doctest::Approx(1.0 / 4.0));
  CHECK(lr_step(LrRule::adaptive(4.0, 2.0), 3.0) == doctest::Approx(0.1));
  CHECK_THROWS_AS(lr_step(LrRule::adaptive(4.0, 2.0), -1.0), std::invalid_argument);

  Optimizer opt(LrRule::constant(0.5), 2);
  std::vector<double> w{1.0, 1.0};
  const std::vector<double> d{2.0, -4.0};
  CHECK(opt.ascend(w, d) == 0.5);
  CHECK(w == std::vector<double>{2.0, -1.0});

  Optimizer ad(LrRule::adaptive(1.0, 1.0), 2);
  std::vector<double> v{0.0, 0.0};
  const std::vector<double> g{3.0, 4.0};  // norm 5 -> eta 1/6
  CHECK(ad.ascend(v, g) == doctest::Approx(1.0 / 6.0));
  CHECK(v[0] == doctest::Approx(0.5));
  CHECK(v[1] == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("clipped rule rescales the step") {
  const auto c = clipped_rule(LrRule::constant(0.4), 2.0);
  CHECK(c.eta == doctest::Approx(0.2));
  const auto a = clipped_rule(LrRule::adaptive(4.0, 2.0), 3.0);
  CHECK(a.a == doctest::Approx(12.0));
  CHECK(a.b == doctest::Approx(2.0));
  const auto same = clipped_rule(LrRule::adaptive(4.0, 2.0), 1.0);
  CHECK(same.a == 4.0);
}

TEST_CASE("adagrad accumulates squared gradients per coordinate") {
  AdagradState s{0.1, 1e-10, {}};
  std::vector<double> w{0.0, 0.0, 0.0};
  adagrad_update(s, w, std::vector<double>{1.0, -2.0, 0.0});
  CHECK(w[0] == doctest::Approx(-0.1));
  CHECK(w[1] == doctest::Approx(0.1));
  CHECK(w[2] == 0.0);
  adagrad_update(s, w, std::vector<double>{1.0, 0.0, 0.0});
  CHECK(w[0] == doctest::Approx(-0.1 - 0.1 / std::sqrt(2.0)));
  CHECK(w[1] == doctest::Approx(0.1));

  // Ascent through Optimizer negates the direction.
  Optimizer opt(LrRule::adagrad(0.1), 1);
  std::vector<double> u{0.0};
  opt.ascend(u, std::vector<double>{3.0});
  CHECK(u[0] == doctest::Approx(0.1));
}

TEST_CASE("rule validation") {
  CHECK_THROWS(LrRule::constant(-1.0).validate());
  CHECK_THROWS(LrRule::adaptive(0.0, 1.0).validate());
  CHECK_THROWS(LrRule::adagrad(0.0).validate());
  CHECK_THROWS(LrRule::adagrad(0.1, -1.0).validate());
  CHECK_NOTHROW(LrRule::adagrad(0.1).validate());
  CHECK(LrRule::adaptive(2.0, 4.0).describe().find("adaptive") != std::string::npos);
}
