#include "choreo/denote.hpp"

#include <algorithm>
#include <functional>
#include <iostream>

namespace choreo::denote {

using hll::AppExpr;
using hll::CommProg;
using hll::Expr;
using hll::LetProg;
using hll::LiftExpr;
using hll::Program;
using hll::ProgramPtr;
using hll::RetProg;
using hll::VarExpr;
using hll::VectorExpr;
using values::PureFnPtr;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

Config::Config(std::map<Role, RoleConfig> roles) : roles_(std::move(roles)) {
  for (const auto& [role, rc] : roles_) {
    if (rc.b > rc.f)
      throw ConfigError("role " + role.name + ": b > f");
    if (rc.b > rc.n)
      throw ConfigError("role " + role.name + ": b > n");
    if (rc.f > rc.n)
      throw ConfigError("role " + role.name + ": f > n");
    if (rc.lo() == 0)
      std::cerr << "[choreo] note: role " << role.name
                << " has n - f = 0; receivers may receive empty lists\n";
  }
}

const RoleConfig& Config::at(const Role& r) const {
  auto it = roles_.find(r);
  if (it == roles_.end()) throw ConfigError("no configuration for role " + r.name);
  return it->second;
}

nlohmann::json Config::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [role, rc] : roles_)
    j[role.name] = {{"n", rc.n}, {"f", rc.f}, {"b", rc.b}};
  return j;
}

Config Config::from_json(const nlohmann::json& j) {
  std::map<Role, RoleConfig> roles;
  for (auto it = j.begin(); it != j.end(); ++it) {
    RoleConfig rc;
    rc.n = it.value().at("n").get<uint32_t>();
    rc.f = it.value().at("f").get<uint32_t>();
    rc.b = it.value().at("b").get<uint32_t>();
    roles[Role{it.key()}] = rc;
  }
  return Config(std::move(roles));
}

// ---------------------------------------------------------------------------
// Netwk building blocks
// ---------------------------------------------------------------------------

std::vector<std::vector<Value>> add_any(std::span<const Value> v, uint32_t b,
                                        const ValueType& t) {
  std::vector<std::vector<Value>> out;
  const std::vector<Value> universe = values::enumerate(t);
  std::vector<Value> cur(v.begin(), v.end());
  std::function<void(uint32_t)> rec = [&](uint32_t left) {
    if (left == 0) {
      out.push_back(cur);
      return;
    }
    for (const Value& u : universe) {
      cur.push_back(u);
      rec(left - 1);
      cur.pop_back();
    }
  };
  rec(b);
  return out;
}

std::set<std::vector<Value>> perm(std::span<const Value> v) {
  std::vector<Value> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  std::set<std::vector<Value>> out;
  do {
    out.insert(sorted);
  } while (std::next_permutation(sorted.begin(), sorted.end()));
  return out;
}

std::vector<std::vector<Value>> trunc(std::span<const Value> v, uint32_t lo) {
  if (lo > v.size())
    throw ConfigError("trunc: cannot wait for " + std::to_string(lo) +
                      " messages out of " + std::to_string(v.size()));
  std::vector<std::vector<Value>> out;
  for (size_t len = lo; len <= v.size(); ++len)
    out.emplace_back(v.begin(), v.begin() + len);
  return out;
}

std::set<std::vector<Value>> netwk(const Config& cfg, const Role& sender,
                                   std::span<const Value> msgs,
                                   const ValueType& t) {
  const RoleConfig& rc = cfg.at(sender);
  if (msgs.size() != rc.good())
    throw ConfigError("netwk: got " + std::to_string(msgs.size()) +
                      " messages for role " + sender.name + " with " +
                      std::to_string(rc.good()) + " good nodes");
  std::set<std::vector<Value>> out;
  for (const auto& added : add_any(msgs, rc.b, t))
    for (const auto& p : perm(added))
      for (auto& pre : trunc(p, rc.lo())) out.insert(std::move(pre));
  return out;
}

// ---------------------------------------------------------------------------
// Fold-outcome enumeration
// ---------------------------------------------------------------------------

namespace {

// Multiset as (value, count) groups in canonical value order.
using Groups = std::vector<std::pair<Value, uint32_t>>;

Groups to_groups(std::span<const Value> vs) {
  std::vector<Value> sorted(vs.begin(), vs.end());
  std::sort(sorted.begin(), sorted.end());
  Groups g;
  for (const Value& v : sorted) {
    if (!g.empty() && g.back().first == v)
      g.back().second++;
    else
      g.emplace_back(v, 1);
  }
  return g;
}

// All multisets of exactly b values drawn from the universe of t.
std::vector<Groups> byz_multisets(uint32_t b, const ValueType& t) {
  const std::vector<Value> universe = values::enumerate(t);
  std::vector<Groups> out;
  Groups cur;
  std::function<void(size_t, uint32_t)> rec = [&](size_t i, uint32_t left) {
    if (left == 0) {
      out.push_back(cur);
      return;
    }
    if (i == universe.size()) return;
    for (uint32_t take = left + 1; take-- > 0;) {
      if (take) cur.emplace_back(universe[i], take);
      rec(i + 1, left - take);
      if (take) cur.pop_back();
    }
  };
  rec(0, b);
  return out;
}

Groups merge_groups(const Groups& a, const Groups& b) {
  Groups out = a;
  for (const auto& [v, c] : b) {
    bool found = false;
    for (auto& [w, d] : out)
      if (w == v) {
        d += c;
        found = true;
        break;
      }
    if (!found) out.emplace_back(v, c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Fold outcomes over all distinct arrangements of sub-multisets of `pool`
// with size in [lo, total]; exact for any combining function because equal
// values are interchangeable in a fold.
void outcomes_by_sequences(const Closure& f, const Value& d, Groups pool,
                           uint32_t lo, std::set<Value>& out) {
  uint32_t total = 0;
  for (const auto& [_, c] : pool) total += c;
  std::function<void(const Value&, uint32_t)> rec = [&](const Value& acc,
                                                        uint32_t depth) {
    if (depth >= lo) out.insert(acc);
    if (depth == total) return;
    for (auto& [v, c] : pool) {
      if (c == 0) continue;
      c -= 1;
      rec(values::fold_step(f, acc, v), depth + 1);
      c += 1;
    }
  };
  rec(d, 0);
}

// Fold outcomes over one canonical representative per sub-multiset; sound
// only for declared permutation-invariant combining functions.
void outcomes_by_multisets(const Closure& f, const Value& d, const Groups& pool,
                           uint32_t lo, std::set<Value>& out) {
  uint32_t total = 0;
  for (const auto& [_, c] : pool) total += c;
  std::function<void(size_t, const Value&, uint32_t)> rec =
      [&](size_t i, const Value& acc, uint32_t size) {
        if (i == pool.size()) {
          if (size >= lo) out.insert(acc);
          return;
        }
        Value cur = acc;
        for (uint32_t take = 0; take <= pool[i].second; ++take) {
          rec(i + 1, cur, size + take);
          if (take < pool[i].second)
            cur = values::fold_step(f, cur, pool[i].first);
        }
      };
  (void)total;
  rec(0, d, 0);
}

}  // namespace

std::set<Value> fold_outcomes(const Closure& f, const Value& d,
                              std::span<const Value> msgs, uint32_t byz,
                              uint32_t lo, const ValueType& t,
                              const Options& opts) {
  std::set<Value> out;
  if (opts.materialize_lists) {
    // Literal oracle path: append-then-permute-then-truncate.
    for (const auto& added : add_any(msgs, byz, t))
      for (const auto& p : perm(added))
        for (const auto& pre : trunc(p, lo)) out.insert(values::fold(f, d, pre));
    return out;
  }
  const Groups base = to_groups(msgs);
  for (const Groups& bm : byz_multisets(byz, t)) {
    const Groups pool = merge_groups(base, bm);
    if (f.commutative())
      outcomes_by_multisets(f, d, pool, lo, out);
    else
      outcomes_by_sequences(f, d, pool, lo, out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expression denotation
// ---------------------------------------------------------------------------

std::vector<SemValue> denote_expr(const Config& cfg, const Env& env,
                                  const Role& role, const Expr& e) {
  const uint32_t g = cfg.good(role);
  if (auto* v = std::get_if<VarExpr>(&e.node())) {
    auto it = env.find(v->name);
    if (it == env.end()) throw Error("unbound variable " + v->name);
    auto rit = it->second.find(role);
    if (rit == it->second.end())
      throw Error("variable " + v->name + " has no component at role " + role.name);
    std::vector<SemValue> out;
    out.reserve(rit->second.size());
    for (const Value& x : rit->second) out.emplace_back(x);
    return out;
  }
  if (auto* l = std::get_if<LiftExpr>(&e.node())) {
    SemValue rep = std::holds_alternative<Value>(l->term)
                       ? SemValue(std::get<Value>(l->term))
                       : SemValue(Closure(std::get<PureFnPtr>(l->term)));
    return std::vector<SemValue>(g, rep);
  }
  if (auto* ve = std::get_if<VectorExpr>(&e.node())) {
    if (ve->items.size() != g)
      throw Error("vector literal of length " + std::to_string(ve->items.size()) +
                  " for role " + role.name + " with " + std::to_string(g) +
                  " good nodes");
    std::vector<SemValue> out;
    for (const Value& x : ve->items) out.emplace_back(x);
    return out;
  }
  const auto& app = std::get<AppExpr>(e.node());
  std::vector<SemValue> fs = denote_expr(cfg, env, role, *app.fn);
  std::vector<SemValue> xs = denote_expr(cfg, env, role, *app.arg);
  if (fs.size() != xs.size()) throw Error("application width mismatch");
  std::vector<SemValue> out;
  out.reserve(fs.size());
  for (size_t i = 0; i < fs.size(); ++i) {
    auto* cl = std::get_if<Closure>(&fs[i]);
    if (!cl) throw Error("application of a non-function value");
    out.push_back(values::apply_one(*cl, values::ground(xs[i])));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Program denotation
// ---------------------------------------------------------------------------

namespace {

std::vector<Value> ground_vector(std::vector<SemValue>&& vs) {
  std::vector<Value> out;
  out.reserve(vs.size());
  for (auto& v : vs) out.push_back(values::ground(v));
  return out;
}

struct Evaluator {
  const Config& cfg;
  const Options& opts;

  void eval(const Program& p, Env& env, OutputSet& out) {
    if (auto* r = std::get_if<RetProg>(&p.node())) {
      DistRecord rec;
      for (const auto& [role, e] : r->record)
        rec.emplace(role, ground_vector(denote_expr(cfg, env, role, *e)));
      out.insert(std::move(rec));
      return;
    }
    if (auto* l = std::get_if<LetProg>(&p.node())) {
      comm_or_general(*l->bound, env, [&](DistRecord&& y) {
        auto [it, inserted] = env.emplace(l->var, std::move(y));
        if (!inserted) throw Error("rebinding of " + l->var);
        eval(*l->body, env, out);
        env.erase(it);
      });
      return;
    }
    // Bare comm at the top level.
    comm_or_general(p, env, [&](DistRecord&& y) { out.insert(std::move(y)); });
  }

  // Produce each record in the denotation of p, invoking k per record. For a
  // Comm this enumerates the cross product of per-receiver fold outcomes
  // lazily; for other shapes it falls back to a full sub-evaluation.
  void comm_or_general(const Program& p, Env& env,
                       const std::function<void(DistRecord&&)>& k) {
    if (auto* c = std::get_if<CommProg>(&p.node())) {
      const Role sender = c->msg->situated_at();
      const Role receiver = c->dflt->situated_at();
      const RoleConfig& sc = cfg.at(sender);
      std::vector<Value> msgs = ground_vector(denote_expr(cfg, env, sender, *c->msg));
      std::vector<SemValue> combines = denote_expr(cfg, env, receiver, *c->combine);
      std::vector<Value> defaults =
          ground_vector(denote_expr(cfg, env, receiver, *c->dflt));
      if (msgs.empty())
        throw Error("comm on " + c->chan.str() + " has no good senders");
      const ValueType msg_type = msgs.front().type();

      const uint32_t g = cfg.good(receiver);
      // Per-receiver outcome sets, memoized on (combine, default); receivers
      // usually share a lifted combining function.
      std::map<std::pair<Closure, Value>, std::set<Value>> memo;
      std::vector<const std::set<Value>*> outcome_sets(g);
      for (uint32_t i = 0; i < g; ++i) {
        auto* cl = std::get_if<Closure>(&combines[i]);
        if (!cl) throw Error("combine did not denote a function");
        std::pair<Closure, Value> key{*cl, defaults[i]};
        auto it = memo.find(key);
        if (it == memo.end())
          it = memo.emplace(key, fold_outcomes(*cl, defaults[i], msgs, sc.b,
                                               sc.lo(), msg_type, opts))
                   .first;
        outcome_sets[i] = &it->second;
      }

      std::vector<Value> picked;
      picked.reserve(g);
      std::function<void()> cross = [&]() {
        if (picked.size() == g) {
          DistRecord rec;
          rec.emplace(receiver, picked);
          k(std::move(rec));
          return;
        }
        for (const Value& v : *outcome_sets[picked.size()]) {
          picked.push_back(v);
          cross();
          picked.pop_back();
        }
      };
      cross();
      return;
    }
    // General sub-program: evaluate fully, then feed each record to k.
    OutputSet sub;
    eval(p, env, sub);
    for (const DistRecord& y : sub) k(DistRecord(y));
  }
};

}  // namespace

OutputSet denote_prog(const Config& cfg, const Env& env, const ProgramPtr& p,
                      const Options& opts) {
  OutputSet out;
  Env mutable_env = env;
  Evaluator{cfg, opts}.eval(*p, mutable_env, out);
  return out;
}

uint32_t count_occurrences(const Value& v, std::span<const Value> l) {
  uint32_t n = 0;
  for (const Value& x : l)
    if (x == v) ++n;
  return n;
}

nlohmann::json record_to_json(const DistRecord& r) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [role, vec] : r) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Value& v : vec) arr.push_back(v.to_json());
    j[role.name] = arr;
  }
  return j;
}

nlohmann::json output_set_to_json(const OutputSet& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const DistRecord& r : s) arr.push_back(record_to_json(r));
  return arr;
}

}  // namespace choreo::denote
