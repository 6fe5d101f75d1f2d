#pragma once

#include <chrono>
#include <cstdint>

namespace mapcsim {

// Per-step computation budget consulted by the group-option watchdog.
// Wall-clock mode matches live play; operation-count mode gives bit-identical
// cutoff points and is what the deterministic test configs use.
class StepBudget {
 public:
  static StepBudget unlimited() { return StepBudget(); }

  static StepBudget wall_clock(std::chrono::milliseconds ms) {
    StepBudget b;
    b.mode_ = Mode::Wall;
    b.deadline_ = std::chrono::steady_clock::now() + ms;
    return b;
  }

  static StepBudget operation_count(std::uint64_t ops) {
    StepBudget b;
    b.mode_ = Mode::Ops;
    b.ops_left_ = ops;
    return b;
  }

  // Consumes `cost` units (ops mode) and reports whether work may continue.
  bool spend(std::uint64_t cost = 1) {
    switch (mode_) {
      case Mode::Unlimited:
        return true;
      case Mode::Wall:
        return std::chrono::steady_clock::now() < deadline_;
      case Mode::Ops:
        if (ops_left_ < cost) {
          ops_left_ = 0;
          return false;
        }
        ops_left_ -= cost;
        return true;
    }
    return true;
  }

  bool exhausted() const {
    switch (mode_) {
      case Mode::Unlimited: return false;
      case Mode::Wall: return std::chrono::steady_clock::now() >= deadline_;
      case Mode::Ops: return ops_left_ == 0;
    }
    return false;
  }

 private:
  enum class Mode { Unlimited, Wall, Ops };
  Mode mode_ = Mode::Unlimited;
  std::chrono::steady_clock::time_point deadline_{};
  std::uint64_t ops_left_ = 0;
};

}  // namespace mapcsim
