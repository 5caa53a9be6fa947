#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>

#include "arlab/types.hpp"

namespace arlab {

enum class RewardKind { outcome, process };

// 0/1 rewards against a hidden labeler. Every evaluation is charged exactly one
// query; nothing is memoized here.
class RewardModel {
 public:
  using Labeler = std::function<Sequence(const Context&)>;

  RewardModel(RewardKind kind, Labeler labeler, int length);

  RewardKind kind() const noexcept { return kind_; }
  int length() const noexcept { return length_; }
  std::uint64_t query_count() const noexcept { return queries_.load(std::memory_order_relaxed); }

  // r(x, y) = 1[y = y*(x)]. Requires kind() == outcome and |y| = N.
  int outcome(const Context& x, std::span<const Token> y) const;
  // r*(x, y_{1:i}) = 1[y_{1:i} = y*_{1:i}(x)]. Requires kind() == process, 1 <= i <= N.
  int process(const Context& x, std::span<const Token> prefix) const;

  // A per-context view that resolves y*(x) once; queries are still charged one
  // by one to the parent counter.
  class Session {
   public:
    int outcome(std::span<const Token> y) const;
    int process(std::span<const Token> prefix) const;

   private:
    friend class RewardModel;
    Session(const RewardModel& rm, Sequence truth) : rm_(&rm), truth_(std::move(truth)) {}
    const RewardModel* rm_;
    Sequence truth_;
  };

  Session session(const Context& x) const;

 private:
  void check_outcome(std::span<const Token> y) const;
  void check_process(std::span<const Token> prefix) const;
  void charge() const { queries_.fetch_add(1, std::memory_order_relaxed); }

  RewardKind kind_;
  Labeler labeler_;
  int length_;
  mutable std::atomic<std::uint64_t> queries_{0};
};

}  // namespace arlab
