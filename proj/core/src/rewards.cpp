#include "arlab/rewards.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace arlab {

RewardModel::RewardModel(RewardKind kind, Labeler labeler, int length)
    : kind_(kind), labeler_(std::move(labeler)), length_(length) {
  if (length < 1) throw std::invalid_argument("reward model needs N >= 1");
}

void RewardModel::check_outcome(std::span<const Token> y) const {
  if (kind_ != RewardKind::outcome) {
    throw std::invalid_argument("outcome query on a process reward model");
  }
  if (static_cast<int>(y.size()) != length_) {
    throw std::invalid_argument("outcome reward needs a full sequence (got length " +
                                std::to_string(y.size()) + ")");
  }
}

void RewardModel::check_process(std::span<const Token> prefix) const {
  if (kind_ != RewardKind::process) {
    throw std::invalid_argument("process query on an outcome reward model");
  }
  if (prefix.empty() || static_cast<int>(prefix.size()) > length_) {
    throw std::invalid_argument("process reward needs 1 <= |prefix| <= N");
  }
}

int RewardModel::outcome(const Context& x, std::span<const Token> y) const {
  return session(x).outcome(y);
}

int RewardModel::process(const Context& x, std::span<const Token> prefix) const {
  return session(x).process(prefix);
}

RewardModel::Session RewardModel::session(const Context& x) const {
  return Session{*this, labeler_(x)};
}

int RewardModel::Session::outcome(std::span<const Token> y) const {
  rm_->check_outcome(y);
  rm_->charge();
  return std::equal(y.begin(), y.end(), truth_.begin(), truth_.end()) ? 1 : 0;
}

int RewardModel::Session::process(std::span<const Token> prefix) const {
  rm_->check_process(prefix);
  rm_->charge();
  return std::equal(prefix.begin(), prefix.end(), truth_.begin()) ? 1 : 0;
}

}  // namespace arlab
