#include "choreo/values.hpp"

#include <algorithm>
#include <sstream>

namespace choreo::values {

// ---------------------------------------------------------------------------
// ValueType
// ---------------------------------------------------------------------------

ValueType::ValueType() : node_(std::make_shared<Node>(Node{Kind::Unit})) {}

ValueType ValueType::unit_type() { return ValueType(); }

ValueType ValueType::bool_type() {
  return ValueType(std::make_shared<Node>(Node{Kind::Bool}));
}

ValueType ValueType::nat_type(uint32_t max) {
  return ValueType(std::make_shared<Node>(Node{Kind::Nat, max}));
}

ValueType ValueType::option(const ValueType& inner) {
  return ValueType(std::make_shared<Node>(Node{Kind::Option, 0, inner.node_}));
}

ValueType ValueType::pair(const ValueType& first, const ValueType& second) {
  return ValueType(
      std::make_shared<Node>(Node{Kind::Pair, 0, first.node_, second.node_}));
}

uint32_t ValueType::nat_max() const {
  if (kind() != Kind::Nat) throw Error("nat_max on non-nat type");
  return node_->max;
}

ValueType ValueType::option_inner() const {
  if (kind() != Kind::Option) throw Error("option_inner on non-option type");
  return ValueType(node_->a);
}

ValueType ValueType::pair_first() const {
  if (kind() != Kind::Pair) throw Error("pair_first on non-pair type");
  return ValueType(node_->a);
}

ValueType ValueType::pair_second() const {
  if (kind() != Kind::Pair) throw Error("pair_second on non-pair type");
  return ValueType(node_->b);
}

uint64_t ValueType::universe_size() const {
  switch (kind()) {
    case Kind::Unit: return 1;
    case Kind::Bool: return 2;
    case Kind::Nat: return uint64_t(node_->max) + 1;
    case Kind::Option: return 1 + ValueType(node_->a).universe_size();
    case Kind::Pair:
      return ValueType(node_->a).universe_size() *
             ValueType(node_->b).universe_size();
  }
  return 0;
}

std::string ValueType::str() const {
  switch (kind()) {
    case Kind::Unit: return "unit";
    case Kind::Bool: return "bool";
    case Kind::Nat: return "nat<=" + std::to_string(node_->max);
    case Kind::Option: return "opt(" + ValueType(node_->a).str() + ")";
    case Kind::Pair:
      return "(" + ValueType(node_->a).str() + "*" + ValueType(node_->b).str() +
             ")";
  }
  return "?";
}

std::strong_ordering ValueType::operator<=>(const ValueType& other) const {
  if (node_ == other.node_) return std::strong_ordering::equal;
  if (auto c = kind() <=> other.kind(); c != 0) return c;
  switch (kind()) {
    case Kind::Unit:
    case Kind::Bool: return std::strong_ordering::equal;
    case Kind::Nat: return node_->max <=> other.node_->max;
    case Kind::Option: return ValueType(node_->a) <=> ValueType(other.node_->a);
    case Kind::Pair: {
      if (auto c = ValueType(node_->a) <=> ValueType(other.node_->a); c != 0)
        return c;
      return ValueType(node_->b) <=> ValueType(other.node_->b);
    }
  }
  return std::strong_ordering::equal;
}

bool ValueType::operator==(const ValueType& other) const {
  return (*this <=> other) == 0;
}

json ValueType::to_json() const {
  switch (kind()) {
    case Kind::Unit: return json{{"k", "unit"}};
    case Kind::Bool: return json{{"k", "bool"}};
    case Kind::Nat: return json{{"k", "nat"}, {"max", node_->max}};
    case Kind::Option:
      return json{{"k", "opt"}, {"inner", ValueType(node_->a).to_json()}};
    case Kind::Pair:
      return json{{"k", "pair"},
                  {"fst", ValueType(node_->a).to_json()},
                  {"snd", ValueType(node_->b).to_json()}};
  }
  return {};
}

ValueType ValueType::from_json(const json& j) {
  const std::string k = j.at("k").get<std::string>();
  if (k == "unit") return unit_type();
  if (k == "bool") return bool_type();
  if (k == "nat") return nat_type(j.at("max").get<uint32_t>());
  if (k == "opt") return option(from_json(j.at("inner")));
  if (k == "pair") return pair(from_json(j.at("fst")), from_json(j.at("snd")));
  throw Error("bad type json: " + j.dump());
}

// ---------------------------------------------------------------------------
// Value
// ---------------------------------------------------------------------------

Value::Value() : type_(ValueType::unit_type()), payload_(std::monostate{}) {}

Value Value::unit() { return Value(); }

Value Value::boolean(bool b) { return Value(ValueType::bool_type(), b); }

Value Value::nat(uint32_t v, uint32_t max) {
  if (v > max) throw Error("nat value exceeds bound");
  return Value(ValueType::nat_type(max), v);
}

Value Value::nat_of(uint32_t v, const ValueType& nat_type) {
  return nat(v, nat_type.nat_max());
}

Value Value::none(const ValueType& inner) {
  return Value(ValueType::option(inner), OptPayload{nullptr});
}

Value Value::some(const Value& inner) {
  return Value(ValueType::option(inner.type()),
               OptPayload{std::make_shared<const Value>(inner)});
}

Value Value::pair(const Value& first, const Value& second) {
  return Value(ValueType::pair(first.type(), second.type()),
               PairPayload{std::make_shared<const Value>(first),
                           std::make_shared<const Value>(second)});
}

bool Value::as_bool() const {
  if (auto* b = std::get_if<bool>(&payload_)) return *b;
  throw Error("as_bool on non-bool value");
}

uint32_t Value::as_nat() const {
  if (auto* n = std::get_if<uint32_t>(&payload_)) return *n;
  throw Error("as_nat on non-nat value");
}

bool Value::is_some() const {
  if (auto* o = std::get_if<OptPayload>(&payload_)) return o->inner != nullptr;
  throw Error("is_some on non-option value");
}

const Value& Value::some_inner() const {
  auto* o = std::get_if<OptPayload>(&payload_);
  if (!o || !o->inner) throw Error("some_inner on non-Some value");
  return *o->inner;
}

const Value& Value::first() const {
  if (auto* p = std::get_if<PairPayload>(&payload_)) return *p->first;
  throw Error("first on non-pair value");
}

const Value& Value::second() const {
  if (auto* p = std::get_if<PairPayload>(&payload_)) return *p->second;
  throw Error("second on non-pair value");
}

std::strong_ordering Value::operator<=>(const Value& other) const {
  if (auto c = type_ <=> other.type_; c != 0) return c;
  switch (type_.kind()) {
    case ValueType::Kind::Unit: return std::strong_ordering::equal;
    case ValueType::Kind::Bool:
      return std::get<bool>(payload_) <=> std::get<bool>(other.payload_);
    case ValueType::Kind::Nat:
      return std::get<uint32_t>(payload_) <=> std::get<uint32_t>(other.payload_);
    case ValueType::Kind::Option: {
      const auto& a = std::get<OptPayload>(payload_);
      const auto& b = std::get<OptPayload>(other.payload_);
      const bool sa = a.inner != nullptr, sb = b.inner != nullptr;
      if (auto c = sa <=> sb; c != 0) return c;  // None before Some
      if (!sa) return std::strong_ordering::equal;
      return *a.inner <=> *b.inner;
    }
    case ValueType::Kind::Pair: {
      const auto& a = std::get<PairPayload>(payload_);
      const auto& b = std::get<PairPayload>(other.payload_);
      if (auto c = *a.first <=> *b.first; c != 0) return c;
      return *a.second <=> *b.second;
    }
  }
  return std::strong_ordering::equal;
}

bool Value::operator==(const Value& other) const { return (*this <=> other) == 0; }

std::string Value::str() const {
  switch (type_.kind()) {
    case ValueType::Kind::Unit: return "tt";
    case ValueType::Kind::Bool: return std::get<bool>(payload_) ? "T" : "F";
    case ValueType::Kind::Nat: return std::to_string(std::get<uint32_t>(payload_));
    case ValueType::Kind::Option: {
      const auto& o = std::get<OptPayload>(payload_);
      return o.inner ? "some(" + o.inner->str() + ")" : "none";
    }
    case ValueType::Kind::Pair: {
      const auto& p = std::get<PairPayload>(payload_);
      return "(" + p.first->str() + "," + p.second->str() + ")";
    }
  }
  return "?";
}

json Value::to_json() const {
  switch (type_.kind()) {
    case ValueType::Kind::Unit: return json{{"t", "unit"}};
    case ValueType::Kind::Bool:
      return json{{"t", "bool"}, {"v", std::get<bool>(payload_)}};
    case ValueType::Kind::Nat:
      return json{{"t", "nat"}, {"v", std::get<uint32_t>(payload_)}};
    case ValueType::Kind::Option: {
      const auto& o = std::get<OptPayload>(payload_);
      if (!o.inner) return json{{"t", "opt"}, {"v", nullptr}};
      return json{{"t", "opt"}, {"v", o.inner->to_json()}};
    }
    case ValueType::Kind::Pair: {
      const auto& p = std::get<PairPayload>(payload_);
      return json{{"t", "pair"},
                  {"v", json::array({p.first->to_json(), p.second->to_json()})}};
    }
  }
  return {};
}

Value Value::from_json(const json& j, const ValueType& expected) {
  const std::string t = j.at("t").get<std::string>();
  switch (expected.kind()) {
    case ValueType::Kind::Unit:
      if (t == "unit") return unit();
      break;
    case ValueType::Kind::Bool:
      if (t == "bool") return boolean(j.at("v").get<bool>());
      break;
    case ValueType::Kind::Nat:
      if (t == "nat") return nat(j.at("v").get<uint32_t>(), expected.nat_max());
      break;
    case ValueType::Kind::Option:
      if (t == "opt") {
        if (j.at("v").is_null()) return none(expected.option_inner());
        return some(from_json(j.at("v"), expected.option_inner()));
      }
      break;
    case ValueType::Kind::Pair:
      if (t == "pair") {
        const auto& arr = j.at("v");
        return pair(from_json(arr.at(0), expected.pair_first()),
                    from_json(arr.at(1), expected.pair_second()));
      }
      break;
  }
  throw Error("value json " + j.dump() + " does not match type " + expected.str());
}

std::vector<Value> enumerate(const ValueType& t) {
  std::vector<Value> out;
  switch (t.kind()) {
    case ValueType::Kind::Unit:
      out.push_back(Value::unit());
      break;
    case ValueType::Kind::Bool:
      out.push_back(Value::boolean(false));
      out.push_back(Value::boolean(true));
      break;
    case ValueType::Kind::Nat:
      for (uint32_t v = 0; v <= t.nat_max(); ++v) out.push_back(Value::nat(v, t.nat_max()));
      break;
    case ValueType::Kind::Option: {
      out.push_back(Value::none(t.option_inner()));
      for (const Value& v : enumerate(t.option_inner())) out.push_back(Value::some(v));
      break;
    }
    case ValueType::Kind::Pair: {
      const auto ls = enumerate(t.pair_first());
      const auto rs = enumerate(t.pair_second());
      for (const Value& l : ls)
        for (const Value& r : rs) out.push_back(Value::pair(l, r));
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closure / application / fold
// ---------------------------------------------------------------------------

Closure::Closure(PureFnPtr fn, std::vector<Value> bound)
    : fn_(std::move(fn)), bound_(std::move(bound)) {
  if (!fn_) throw Error("closure over null function");
  if (bound_.size() > fn_->params.size()) throw Error("closure over-applied");
  for (size_t i = 0; i < bound_.size(); ++i) {
    if (!(bound_[i].type() == fn_->params[i]))
      throw Error("closure argument " + std::to_string(i) + " of " + fn_->name +
                  ": expected " + fn_->params[i].str() + ", got " +
                  bound_[i].type().str());
  }
}

const ValueType& Closure::next_param() const {
  if (remaining() == 0) throw Error("next_param on saturated closure");
  return fn_->params[bound_.size()];
}

std::strong_ordering Closure::operator<=>(const Closure& other) const {
  if (auto c = fn_->name <=> other.fn_->name; c != 0) return c;
  return bound_ <=> other.bound_;
}

bool Closure::operator==(const Closure& other) const {
  return (*this <=> other) == 0;
}

std::string Closure::str() const {
  std::ostringstream os;
  os << fn_->name;
  for (const auto& v : bound_) os << " " << v.str();
  return os.str();
}

bool is_ground(const SemValue& v) { return std::holds_alternative<Value>(v); }

const Value& ground(const SemValue& v) {
  if (auto* g = std::get_if<Value>(&v)) return *g;
  throw Error("expected a ground value, got closure " +
              std::get<Closure>(v).str());
}

std::string sem_str(const SemValue& v) {
  return is_ground(v) ? std::get<Value>(v).str() : std::get<Closure>(v).str();
}

bool sem_equal(const SemValue& a, const SemValue& b) {
  if (is_ground(a) != is_ground(b)) return false;
  if (is_ground(a)) return std::get<Value>(a) == std::get<Value>(b);
  return std::get<Closure>(a) == std::get<Closure>(b);
}

SemValue apply_one(const Closure& f, const Value& arg) {
  if (f.remaining() == 0)
    throw Error("application of saturated function " + f.fn().name);
  if (!(arg.type() == f.next_param()))
    throw Error("argument type mismatch applying " + f.fn().name + ": expected " +
                f.next_param().str() + ", got " + arg.type().str());
  std::vector<Value> bound = f.bound();
  bound.push_back(arg);
  if (bound.size() == f.fn().params.size()) {
    Value r = f.fn().body(bound);
    if (!(r.type() == f.fn().result))
      throw Error("function " + f.fn().name + " returned " + r.type().str() +
                  ", declared " + f.fn().result.str());
    return r;
  }
  return Closure(f.fn_ptr(), std::move(bound));
}

Value apply(const Closure& f, std::span<const Value> args) {
  if (args.size() != f.remaining())
    throw Error("arity mismatch applying " + f.fn().name + ": expected " +
                std::to_string(f.remaining()) + " args, got " +
                std::to_string(args.size()));
  SemValue cur = f;
  for (const Value& a : args) cur = apply_one(std::get<Closure>(cur), a);
  return std::get<Value>(cur);
}

Value apply(const PureFnPtr& f, std::span<const Value> args) {
  return choreo::values::apply(Closure(f), args);
}

Value fold_step(const Closure& f, const Value& acc, const Value& msg) {
  if (f.remaining() != 2)
    throw Error("fold requires a combining function with (acc, msg) remaining; " +
                f.str() + " has " + std::to_string(f.remaining()));
  const Value args[2] = {acc, msg};
  return choreo::values::apply(f, args);
}

Value fold(const Closure& f, const Value& init, std::span<const Value> msgs) {
  Value acc = init;
  for (const Value& m : msgs) acc = fold_step(f, acc, m);
  return acc;
}

Value fold(const PureFnPtr& f, const Value& init, std::span<const Value> msgs) {
  return fold(Closure(f), init, msgs);
}

bool check_fold_order_invariance(const Closure& f, size_t max_len,
                                 std::string* witness) {
  if (f.remaining() != 2) throw Error("invariance check needs (acc, msg) shape");
  const ValueType& acc_t = f.next_param();
  const ValueType msg_t = f.fn().params.back();
  std::vector<Value> accs = enumerate(acc_t);
  if (accs.size() > 16) accs.resize(16);  // small slice is enough for a gate
  const std::vector<Value> universe = enumerate(msg_t);

  std::vector<Value> list;
  // Depth-first enumeration of all lists up to max_len.
  std::function<bool(const Value&)> check_list = [&](const Value& d) {
    std::vector<Value> sorted = list;
    std::sort(sorted.begin(), sorted.end());
    const Value expect = fold(f, d, sorted);
    do {
      if (!(fold(f, d, sorted) == expect)) {
        if (witness) {
          std::ostringstream os;
          os << f.str() << " with default " << d.str() << " on [";
          for (const auto& v : sorted) os << v.str() << " ";
          os << "] disagrees with the sorted order";
          *witness = os.str();
        }
        return false;
      }
    } while (std::next_permutation(sorted.begin(), sorted.end()));
    return true;
  };
  std::function<bool()> rec = [&]() {
    for (const Value& d : accs)
      if (!check_list(d)) return false;
    if (list.size() == max_len) return true;
    for (const Value& v : universe) {
      list.push_back(v);
      if (!rec()) return false;
      list.pop_back();
    }
    return true;
  };
  return rec();
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

PureFnPtr Registry::add(PureFn fn) {
  if (fns_.count(fn.name)) throw Error("duplicate function name: " + fn.name);
  auto ptr = std::make_shared<const PureFn>(std::move(fn));
  fns_[ptr->name] = ptr;
  return ptr;
}

PureFnPtr Registry::get(const std::string& name) const {
  auto it = fns_.find(name);
  if (it == fns_.end()) throw Error("unknown function: " + name);
  return it->second;
}

bool Registry::contains(const std::string& name) const {
  return fns_.count(name) != 0;
}

std::vector<PureFnPtr> Registry::all() const {
  std::vector<PureFnPtr> out;
  for (const auto& [_, fn] : fns_) out.push_back(fn);
  return out;
}

}  // namespace choreo::values
