#include <doctest.h>

#include "arlab/rewards.hpp"

using namespace arlab;

namespace {
Sequence truth(const Context& x) { return x.id == 0 ? Sequence{1, 2, 0} : Sequence{0, 0, 0}; }
}  // namespace

TEST_CASE("outcome rewards count one query per evaluation") {
  const RewardModel rm(RewardKind::outcome, truth, 3);
  const Context x{{}, 0};
  CHECK(rm.outcome(x, Sequence{1, 2, 0}) == 1);
  CHECK(rm.outcome(x, Sequence{1, 2, 1}) == 0);
  CHECK(rm.outcome(x, Sequence{1, 2, 0}) == 1);  // not memoized
  CHECK(rm.query_count() == 3);
  CHECK_THROWS_AS(rm.outcome(x, Sequence{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(rm.process(x, Sequence{1}), std::invalid_argument);
}

TEST_CASE("process rewards check prefixes") {
  const RewardModel rm(RewardKind::process, truth, 3);
  const Context x{{}, 0};
  CHECK(rm.process(x, Sequence{1}) == 1);
  CHECK(rm.process(x, Sequence{1, 2}) == 1);
  CHECK(rm.process(x, Sequence{1, 0}) == 0);
  CHECK(rm.process(x, Sequence{1, 2, 0}) == 1);
  CHECK(rm.query_count() == 4);
  CHECK_THROWS_AS(rm.process(x, Sequence{}), std::invalid_argument);
  CHECK_THROWS_AS(rm.process(x, Sequence{1, 2, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(rm.outcome(x, Sequence{1, 2, 0}), std::invalid_argument);
}

TEST_CASE("sessions charge the parent counter") {
  const RewardModel rm(RewardKind::process, truth, 3);
  const auto s = rm.session(Context{{}, 1});
  CHECK(s.process(Sequence{0}) == 1);
  CHECK(s.process(Sequence{0, 1}) == 0);
  CHECK(rm.query_count() == 2);
  CHECK_THROWS_AS(s.outcome(Sequence{0, 0, 0}), std::invalid_argument);
}
