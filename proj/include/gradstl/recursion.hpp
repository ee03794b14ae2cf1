#pragma once

// The adaptive-window recursion shared by every evaluator.
//
// A temporal operator evaluated at sample n with window [lo, hi] either
// stops (the base clause: n is the last sample, or the window would end
// before the next sample) or combines the current sample with a recursive
// evaluation at n + 1 under the window shifted by delta_t(n).
//
// The recursion is written once against an "algebra" that supplies the
// meaning of atoms, negation, conjunction, disjunction and the two window
// tests (lo <= 0, lo > 0):
//
//   struct Algebra {
//     using Value = ...;
//     Value atom(const FormulaNode& atom, std::size_t n) const;
//     Value negate(const Value&) const;
//     Value conj(const Value&, const Value&) const;
//     Value disj(const Value&, const Value&) const;
//     Value lo_reached(double lo) const;   // lo <= 0
//     Value lo_pending(double lo) const;   // lo > 0
//   };
//
// Booleans give the boolean semantics; smooth min/max give smooth
// robustness; value/derivative pairs give its derivative.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>

#include "gradstl/error.hpp"
#include "gradstl/formula.hpp"
#include "gradstl/signal.hpp"

namespace gradstl {

struct EvalStats {
  // Number of (sub-formula, sample) evaluations, temporal steps included.
  std::size_t call_count = 0;
  // 1 + the most temporal steps (n -> n + 1) taken along one chain of
  // nested calls.
  std::size_t max_temporal_depth = 0;
};

// One step of a temporal operator's recursion.
struct TemporalVisit {
  const FormulaNode* node = nullptr;
  std::size_t position = 0;
  Window window;
  bool base = false;
};

using VisitObserver = std::function<void(const TemporalVisit&)>;

// True when the temporal recursion at `n` under `w` takes the base clause.
inline bool is_base_step(const Signal& s, std::size_t n, const Window& w) {
  return n + 1 == s.size() || w.hi - delta_t(s, n) < 0.0;
}

template <class Algebra>
class Recursion {
 public:
  using Value = typename Algebra::Value;

  Recursion(const Algebra& algebra, const Signal& signal)
      : algebra_(algebra), signal_(signal) {}

  void set_observer(const VisitObserver* observer) { observer_ = observer; }
  void set_stats(EvalStats* stats) { stats_ = stats; }
  // Caches results per (node, sample, window). Only for algebras whose
  // values are cheap to copy or are handles into an external structure.
  void set_memoize(bool on) { memoize_ = on; }

  Value operator()(const Formula& f, std::size_t n) {
    if (n >= signal_.size()) {
      throw IndexError("evaluation position " + std::to_string(n) +
                       " is outside a signal of " +
                       std::to_string(signal_.size()) + " samples");
    }
    return eval(f.node(), n, f.node().window, 0);
  }

 private:
  struct Key {
    const FormulaNode* node;
    std::size_t n;
    std::uint64_t lo;
    std::uint64_t hi;
    bool operator==(const Key&) const = default;
  };

  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::size_t h = std::hash<const void*>()(k.node);
      auto mix = [&h](std::uint64_t v) {
        h ^= std::hash<std::uint64_t>()(v) + 0x9e3779b97f4a7c15ULL + (h << 6) +
             (h >> 2);
      };
      mix(k.n);
      mix(k.lo);
      mix(k.hi);
      return h;
    }
  };

  Value eval(const FormulaNode& node, std::size_t n, const Window& w,
             std::size_t steps) {
    if (stats_ != nullptr) {
      ++stats_->call_count;
      stats_->max_temporal_depth = std::max(stats_->max_temporal_depth, steps + 1);
    }
    if (!memoize_) return compute(node, n, w, steps);
    const Key key{&node, n, std::bit_cast<std::uint64_t>(w.lo),
                  std::bit_cast<std::uint64_t>(w.hi)};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Value v = compute(node, n, w, steps);
    memo_.emplace(key, v);
    return v;
  }

  Value fresh(const Formula& f, std::size_t n, std::size_t steps) {
    return eval(f.node(), n, f.node().window, steps);
  }

  Value compute(const FormulaNode& node, std::size_t n, const Window& w,
                std::size_t steps) {
    switch (node.kind) {
      case FormulaKind::Atom:
        return algebra_.atom(node, n);
      case FormulaKind::Not:
        return algebra_.negate(fresh(node.args[0], n, steps));
      case FormulaKind::And: {
        Value a = fresh(node.args[0], n, steps);
        Value b = fresh(node.args[1], n, steps);
        return algebra_.conj(a, b);
      }
      case FormulaKind::Always:
      case FormulaKind::Eventually:
      case FormulaKind::Until:
        return temporal(node, n, w, steps);
    }
    throw Error("unknown formula node");
  }

  Value temporal(const FormulaNode& node, std::size_t n, const Window& w,
                 std::size_t steps) {
    const bool base = is_base_step(signal_, n, w);
    if (observer_ != nullptr && *observer_) (*observer_)({&node, n, w, base});

    switch (node.kind) {
      case FormulaKind::Eventually: {
        // base: lo <= 0 & E(p, n)
        // step: (lo <= 0 & E(p, n)) | E(F[lo - dt, hi - dt] p, n + 1)
        Value here = algebra_.conj(algebra_.lo_reached(w.lo),
                                   fresh(node.args[0], n, steps));
        if (base) return here;
        Value later = eval(node, n + 1, w.shifted(delta_t(signal_, n)), steps + 1);
        return algebra_.disj(here, later);
      }
      case FormulaKind::Always: {
        // base: lo <= 0 & E(p, n)
        // step: (lo > 0 | E(p, n)) & E(G[lo - dt, hi - dt] p, n + 1)
        if (base) {
          return algebra_.conj(algebra_.lo_reached(w.lo),
                               fresh(node.args[0], n, steps));
        }
        Value here = algebra_.disj(algebra_.lo_pending(w.lo),
                                   fresh(node.args[0], n, steps));
        Value later = eval(node, n + 1, w.shifted(delta_t(signal_, n)), steps + 1);
        return algebra_.conj(here, later);
      }
      case FormulaKind::Until: {
        // base: lo <= 0 & E(p1 & p2, n)
        // step: ((lo > 0 | E(p1, n)) & E(p1 U[lo - dt, hi - dt] p2, n + 1))
        //       | (lo <= 0 & E(p1 & p2, n))
        const FormulaNode& both = node.both->node();
        if (base) {
          return algebra_.conj(algebra_.lo_reached(w.lo),
                               eval(both, n, both.window, steps));
        }
        Value holding = algebra_.disj(algebra_.lo_pending(w.lo),
                                      fresh(node.args[0], n, steps));
        Value later = eval(node, n + 1, w.shifted(delta_t(signal_, n)), steps + 1);
        Value keep_going = algebra_.conj(holding, later);
        Value stop_here = algebra_.conj(algebra_.lo_reached(w.lo),
                                        eval(both, n, both.window, steps));
        return algebra_.disj(keep_going, stop_here);
      }
      default:
        break;
    }
    throw Error("not a temporal node");
  }

  const Algebra& algebra_;
  const Signal& signal_;
  const VisitObserver* observer_ = nullptr;
  EvalStats* stats_ = nullptr;
  bool memoize_ = false;
  std::unordered_map<Key, Value, KeyHash> memo_;
};

}  // namespace gradstl
