// Denotational semantics: configurations, the adversarial network relation
// Netwk, and exhaustive enumeration of a program's possible output records.
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "choreo/hll.hpp"
#include "choreo/values.hpp"

namespace choreo::denote {

using hll::Role;
using values::Closure;
using values::SemValue;
using values::Value;
using values::ValueType;

struct RoleConfig {
  uint32_t n = 0;  // total nodes
  uint32_t f = 0;  // fault bound
  uint32_t b = 0;  // Byzantine nodes, b <= f
  uint32_t good() const { return n - b; }
  uint32_t lo() const { return n - f; }  // minimum deliveries a receiver waits for
};

class Config {
 public:
  Config() = default;
  explicit Config(std::map<Role, RoleConfig> roles);

  const RoleConfig& at(const Role& r) const;
  const std::map<Role, RoleConfig>& roles() const { return roles_; }
  uint32_t good(const Role& r) const { return at(r).good(); }
  uint32_t byz(const Role& r) const { return at(r).b; }

  nlohmann::json to_json() const;
  static Config from_json(const nlohmann::json& j);

 private:
  std::map<Role, RoleConfig> roles_;
};

struct NodeId {
  Role role;
  uint32_t index = 0;  // good nodes [0, g); Byzantine [g, n)
  auto operator<=>(const NodeId&) const = default;
  std::string str() const { return role.name + "/" + std::to_string(index); }
};

// Record of per-role vectors, one element per good node.
using DistRecord = std::map<Role, std::vector<Value>>;
using Env = std::map<std::string, DistRecord>;
using OutputSet = std::set<DistRecord>;

struct Options {
  // Materialize message lists literally (add_any >>= perm >>= trunc) instead
  // of enumerating fold outcomes; the oracle path for cross-checks.
  bool materialize_lists = false;
};

// All vectors extending v with exactly b values of type t appended at the end.
std::vector<std::vector<Value>> add_any(std::span<const Value> v, uint32_t b,
                                        const ValueType& t);
// All distinct permutations of v.
std::set<std::vector<Value>> perm(std::span<const Value> v);
// All prefixes of v with length >= lo. Throws ConfigError when lo > |v|.
std::vector<std::vector<Value>> trunc(std::span<const Value> v, uint32_t lo);
// (add_any msgs b) >>= perm >>= (trunc . (n - f)), parameters taken from the
// sender role's configuration entry.
std::set<std::vector<Value>> netwk(const Config& cfg, const Role& sender,
                                   std::span<const Value> msgs,
                                   const ValueType& t);

// The set { fold(f, d, l) : l in netwk(msgs) } without materializing lists
// unless asked to; permutations are skipped for declared commutative folds.
std::set<Value> fold_outcomes(const Closure& f, const Value& d,
                              std::span<const Value> msgs, uint32_t byz,
                              uint32_t lo, const ValueType& t,
                              const Options& opts = {});

std::vector<SemValue> denote_expr(const Config& cfg, const Env& env,
                                  const Role& role, const hll::Expr& e);

OutputSet denote_prog(const Config& cfg, const Env& env, const hll::ProgramPtr& p,
                      const Options& opts = {});

// #_v(l): number of occurrences of v in l.
uint32_t count_occurrences(const Value& v, std::span<const Value> l);

nlohmann::json record_to_json(const DistRecord& r);
nlohmann::json output_set_to_json(const OutputSet& s);

}  // namespace choreo::denote
