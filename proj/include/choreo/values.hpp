// Finite value universe and pure-function layer shared by the denotational
// enumerator and the operational simulator.
#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace choreo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace values {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// ValueType: Unit | Bool | BoundedNat(max) | Option(inner) | Pair(l, r)
// Every type has a finite, canonically ordered enumeration of inhabitants.
// ---------------------------------------------------------------------------
class ValueType {
 public:
  enum class Kind { Unit, Bool, Nat, Option, Pair };

  ValueType();  // unit
  static ValueType unit_type();
  static ValueType bool_type();
  static ValueType nat_type(uint32_t max);
  static ValueType option(const ValueType& inner);
  static ValueType pair(const ValueType& first, const ValueType& second);

  Kind kind() const { return node_->kind; }
  uint32_t nat_max() const;
  ValueType option_inner() const;
  ValueType pair_first() const;
  ValueType pair_second() const;

  uint64_t universe_size() const;
  std::string str() const;

  std::strong_ordering operator<=>(const ValueType& other) const;
  bool operator==(const ValueType& other) const;

  json to_json() const;
  static ValueType from_json(const json& j);

 private:
  struct Node {
    Kind kind;
    uint32_t max = 0;
    std::shared_ptr<const Node> a, b;
  };
  explicit ValueType(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Value: a tagged inhabitant of exactly one ValueType. Immutable.
// ---------------------------------------------------------------------------
class Value {
 public:
  Value();  // unit
  static Value unit();
  static Value boolean(bool b);
  static Value nat(uint32_t v, uint32_t max);
  static Value nat_of(uint32_t v, const ValueType& nat_type);
  static Value none(const ValueType& inner);
  static Value some(const Value& inner);
  static Value pair(const Value& first, const Value& second);

  const ValueType& type() const { return type_; }

  bool as_bool() const;
  uint32_t as_nat() const;
  bool is_some() const;               // requires Option
  const Value& some_inner() const;    // requires Some
  const Value& first() const;         // requires Pair
  const Value& second() const;        // requires Pair

  std::strong_ordering operator<=>(const Value& other) const;
  bool operator==(const Value& other) const;

  std::string str() const;
  json to_json() const;
  static Value from_json(const json& j, const ValueType& expected);

 private:
  struct OptPayload {
    std::shared_ptr<const Value> inner;  // null means None
  };
  struct PairPayload {
    std::shared_ptr<const Value> first, second;
  };
  using Payload = std::variant<std::monostate, bool, uint32_t, OptPayload, PairPayload>;

  Value(ValueType t, Payload p) : type_(std::move(t)), payload_(std::move(p)) {}
  ValueType type_;
  Payload payload_;
};

// Every inhabitant exactly once, canonical order: false < true, naturals
// ascending, None before Some, pairs lexicographic.
std::vector<Value> enumerate(const ValueType& t);

// ---------------------------------------------------------------------------
// PureFn: named, total, deterministic function over Values. Registered once
// so both semantics resolve identical bodies by name.
// ---------------------------------------------------------------------------
struct PureFn {
  std::string name;
  std::vector<ValueType> params;
  ValueType result;
  std::function<Value(std::span<const Value>)> body;
  // Declared: folding this function (with any fixed prefix of bound args)
  // over a message list is invariant under permutation of the list. The
  // declaration is gate-tested before being trusted; see
  // check_fold_order_invariance.
  bool commutative_fold = false;
};
using PureFnPtr = std::shared_ptr<const PureFn>;

// Partial application of a registered PureFn. Comparable by function name
// plus bound arguments, which makes node-state dedup possible.
class Closure {
 public:
  explicit Closure(PureFnPtr fn, std::vector<Value> bound = {});

  const PureFn& fn() const { return *fn_; }
  const PureFnPtr& fn_ptr() const { return fn_; }
  const std::vector<Value>& bound() const { return bound_; }
  size_t remaining() const { return fn_->params.size() - bound_.size(); }
  const ValueType& next_param() const;
  // True when usable as a permutation-invariant combining function, i.e.
  // exactly (acc, msg) remain and the function is declared invariant.
  bool commutative() const { return remaining() == 2 && fn_->commutative_fold; }

  std::strong_ordering operator<=>(const Closure& other) const;
  bool operator==(const Closure& other) const;
  std::string str() const;

 private:
  PureFnPtr fn_;
  std::vector<Value> bound_;
};

// A semantic value: either a ground Value or a partially applied function.
using SemValue = std::variant<Value, Closure>;

bool is_ground(const SemValue& v);
const Value& ground(const SemValue& v);  // throws if a closure
std::string sem_str(const SemValue& v);
bool sem_equal(const SemValue& a, const SemValue& b);

// Apply one argument; yields either a ground result or another closure.
SemValue apply_one(const Closure& f, const Value& arg);
// Full application of all remaining parameters. Throws Error on arity or
// argument type mismatch.
Value apply(const Closure& f, std::span<const Value> args);
Value apply(const PureFnPtr& f, std::span<const Value> args);
// One fold step: f must have exactly (acc, msg) remaining.
Value fold_step(const Closure& f, const Value& acc, const Value& msg);
// Left fold of f over msgs starting from init.
Value fold(const Closure& f, const Value& init, std::span<const Value> msgs);
Value fold(const PureFnPtr& f, const Value& init, std::span<const Value> msgs);

// Gate for the commutative_fold declaration: exhaustively folds every list
// of length <= max_len over the message universe (for every default drawn
// from a small slice of the accumulator universe) against every permutation.
// Returns false with a witness description if any permutation disagrees.
bool check_fold_order_invariance(const Closure& f, size_t max_len,
                                 std::string* witness = nullptr);

// ---------------------------------------------------------------------------
// Registry: named PureFns, populated single-threaded at startup, immutable
// afterwards.
// ---------------------------------------------------------------------------
class Registry {
 public:
  PureFnPtr add(PureFn fn);
  PureFnPtr get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<PureFnPtr> all() const;

 private:
  std::map<std::string, PureFnPtr> fns_;
};

}  // namespace values
}  // namespace choreo
