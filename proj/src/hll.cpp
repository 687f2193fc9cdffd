#include "choreo/hll.hpp"

#include <algorithm>
#include <sstream>

namespace choreo::hll {

using values::Closure;
using values::PureFn;

// ---------------------------------------------------------------------------
// Expr
// ---------------------------------------------------------------------------

ExprPtr Expr::var(std::string name, Role at) {
  return std::make_shared<Expr>(Node{VarExpr{std::move(name), std::move(at)}});
}
ExprPtr Expr::lift(Value v, Role at) {
  return std::make_shared<Expr>(Node{LiftExpr{std::move(v), std::move(at)}});
}
ExprPtr Expr::lift(PureFnPtr fn, Role at) {
  return std::make_shared<Expr>(Node{LiftExpr{std::move(fn), std::move(at)}});
}
ExprPtr Expr::vec(std::vector<Value> items, Role at) {
  return std::make_shared<Expr>(Node{VectorExpr{std::move(items), std::move(at)}});
}
ExprPtr Expr::app(ExprPtr fn, ExprPtr arg) {
  return std::make_shared<Expr>(Node{AppExpr{std::move(fn), std::move(arg)}});
}
ExprPtr Expr::apps(ExprPtr fn, std::initializer_list<ExprPtr> args) {
  ExprPtr cur = std::move(fn);
  for (const ExprPtr& a : args) cur = app(cur, a);
  return cur;
}

Role Expr::situated_at() const {
  if (auto* v = std::get_if<VarExpr>(&node_)) return v->at;
  if (auto* l = std::get_if<LiftExpr>(&node_)) return l->at;
  if (auto* ve = std::get_if<VectorExpr>(&node_)) return ve->at;
  return std::get<AppExpr>(node_).fn->situated_at();
}

// ---------------------------------------------------------------------------
// Program
// ---------------------------------------------------------------------------

ProgramPtr Program::ret(std::map<Role, ExprPtr> record) {
  return std::make_shared<Program>(Node{RetProg{std::move(record)}});
}
ProgramPtr Program::let(std::string var, ProgramPtr bound, ProgramPtr body) {
  return std::make_shared<Program>(
      Node{LetProg{std::move(var), std::move(bound), std::move(body)}});
}
ProgramPtr Program::comm(ChannelId chan, ExprPtr msg, ExprPtr dflt,
                         ExprPtr combine) {
  return std::make_shared<Program>(Node{
      CommProg{std::move(chan), std::move(msg), std::move(dflt), std::move(combine)}});
}

// ---------------------------------------------------------------------------
// ExprType
// ---------------------------------------------------------------------------

ExprType ExprType::data(ValueType t) {
  ExprType e;
  e.data_ = std::move(t);
  return e;
}

ExprType ExprType::arrow(ExprType arg, ExprType res) {
  ExprType e;
  e.arg_ = std::make_shared<const ExprType>(std::move(arg));
  e.res_ = std::make_shared<const ExprType>(std::move(res));
  return e;
}

ExprType ExprType::of_fn(const PureFn& fn) {
  ExprType cur = data(fn.result);
  for (auto it = fn.params.rbegin(); it != fn.params.rend(); ++it)
    cur = arrow(data(*it), cur);
  return cur;
}

const ValueType& ExprType::value_type() const {
  if (!data_) throw Error("value_type on arrow type");
  return *data_;
}
const ExprType& ExprType::arg() const {
  if (data_) throw Error("arg on data type");
  return *arg_;
}
const ExprType& ExprType::res() const {
  if (data_) throw Error("res on data type");
  return *res_;
}

bool ExprType::operator==(const ExprType& other) const {
  if (is_data() != other.is_data()) return false;
  if (is_data()) return *data_ == *other.data_;
  return *arg_ == *other.arg_ && *res_ == *other.res_;
}

std::string ExprType::str() const {
  if (is_data()) return data_->str();
  return "(" + arg_->str() + " -> " + res_->str() + ")";
}

// ---------------------------------------------------------------------------
// Typechecking
// ---------------------------------------------------------------------------

ExprType typecheck_expr(const TypeEnv& gamma, const Role& role, const Expr& e) {
  if (auto* v = std::get_if<VarExpr>(&e.node())) {
    if (!(v->at == role))
      throw TypeError(TypeErrorCode::RoleMismatch,
                      "variable " + v->name + " situated at " + v->at.name +
                          " used at role " + role.name);
    auto it = gamma.find(v->name);
    if (it == gamma.end())
      throw TypeError(TypeErrorCode::UnknownVariable,
                      "unknown variable " + v->name);
    auto rit = it->second.find(role);
    if (rit == it->second.end())
      throw TypeError(TypeErrorCode::RoleNotInRecord,
                      "variable " + v->name + " has no component at role " +
                          role.name);
    return ExprType::data(rit->second);
  }
  if (auto* l = std::get_if<LiftExpr>(&e.node())) {
    if (!(l->at == role))
      throw TypeError(TypeErrorCode::RoleMismatch,
                      "lifted term situated at " + l->at.name + " used at role " +
                          role.name);
    if (auto* val = std::get_if<Value>(&l->term))
      return ExprType::data(val->type());
    return ExprType::of_fn(**std::get_if<PureFnPtr>(&l->term));
  }
  if (auto* ve = std::get_if<VectorExpr>(&e.node())) {
    if (!(ve->at == role))
      throw TypeError(TypeErrorCode::RoleMismatch, "vector literal role mismatch");
    if (ve->items.empty())
      throw TypeError(TypeErrorCode::EmptyVectorLiteral, "empty vector literal");
    for (const Value& v : ve->items)
      if (!(v.type() == ve->items.front().type()))
        throw TypeError(TypeErrorCode::ApplicationMismatch,
                        "heterogeneous vector literal");
    return ExprType::data(ve->items.front().type());
  }
  const auto& app = std::get<AppExpr>(e.node());
  ExprType ft = typecheck_expr(gamma, role, *app.fn);
  ExprType at = typecheck_expr(gamma, role, *app.arg);
  if (ft.is_data())
    throw TypeError(TypeErrorCode::ApplicationMismatch,
                    "application of non-function value of type " + ft.str());
  if (!at.is_data())
    throw TypeError(TypeErrorCode::HigherOrderArgument,
                    "function-typed arguments are not supported: " + at.str());
  if (!(ft.arg() == at))
    throw TypeError(TypeErrorCode::ApplicationMismatch,
                    "argument type " + at.str() + " does not match parameter " +
                        ft.arg().str());
  return ft.res();
}

namespace {

struct ProgChecker {
  const RoleSet& roles;
  Typing& out;
  std::set<std::string> binders;

  // Returns (channels, result type) for p under gamma.
  std::pair<ChannelContext, RecordType> check(const TypeEnv& gamma,
                                              const Program& p) {
    if (auto* r = std::get_if<RetProg>(&p.node())) {
      if (r->record.empty())
        throw TypeError(TypeErrorCode::EmptyRecord, "ret with empty record");
      RecordType rt;
      for (const auto& [role, e] : r->record) {
        if (!roles.count(role))
          throw TypeError(TypeErrorCode::UnknownRole,
                          "role " + role.name + " not in role set");
        ExprType t = typecheck_expr(gamma, role, *e);
        if (!t.is_data())
          throw TypeError(TypeErrorCode::NotGround,
                          "ret field at " + role.name + " has function type " +
                              t.str());
        rt.emplace(role, t.value_type());
      }
      return {{}, rt};
    }
    if (auto* l = std::get_if<LetProg>(&p.node())) {
      if (gamma.count(l->var) || !binders.insert(l->var).second)
        throw TypeError(TypeErrorCode::DuplicateBinding,
                        "rebinding of variable " + l->var);
      auto [d1, t1] = check(gamma, *l->bound);
      TypeEnv gamma2 = gamma;
      gamma2[l->var] = t1;
      auto [d2, t2] = check(gamma2, *l->body);
      for (const auto& e1 : d1)
        for (const auto& e2 : d2)
          if (e1.id == e2.id)
            throw TypeError(TypeErrorCode::ChannelReuse,
                            "channel " + e1.id.str() + " used more than once");
      ChannelContext d = d1;
      d.insert(d.end(), d2.begin(), d2.end());
      return {d, t2};
    }
    const auto& c = std::get<CommProg>(p.node());
    const Role sender = c.msg->situated_at();
    const Role receiver = c.dflt->situated_at();
    if (!roles.count(sender) || !roles.count(receiver))
      throw TypeError(TypeErrorCode::UnknownRole,
                      "comm on " + c.chan.str() + " uses a role outside the set");
    ExprType mt = typecheck_expr(gamma, sender, *c.msg);
    if (!mt.is_data())
      throw TypeError(TypeErrorCode::NotGround, "message expression has function type");
    ExprType dt = typecheck_expr(gamma, receiver, *c.dflt);
    if (!dt.is_data())
      throw TypeError(TypeErrorCode::NotGround, "default expression has function type");
    ExprType ft = typecheck_expr(gamma, receiver, *c.combine);
    // combine : tau -> tau_m -> tau
    ExprType want = ExprType::arrow(
        ExprType::data(dt.value_type()),
        ExprType::arrow(ExprType::data(mt.value_type()),
                        ExprType::data(dt.value_type())));
    if (!(ft == want))
      throw TypeError(TypeErrorCode::BadCombineType,
                      "combine on " + c.chan.str() + " has type " + ft.str() +
                          ", expected " + want.str());
    out.comms[&p] = CommTyping{sender, receiver, mt.value_type(), dt.value_type()};
    ChannelContext d{{c.chan, sender, receiver, mt.value_type()}};
    return {d, RecordType{{receiver, dt.value_type()}}};
  }
};

}  // namespace

Typing typecheck_prog(const TypeEnv& gamma, const RoleSet& roles,
                      const Program& p) {
  Typing out;
  ProgChecker checker{roles, out, {}};
  auto [d, t] = checker.check(gamma, p);
  out.channels = std::move(d);
  out.result = std::move(t);
  return out;
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

ExprPtr subst_expr(const ExprPtr& e, const std::string& name,
                   const std::map<Role, ExprPtr>& replacement) {
  if (auto* v = std::get_if<VarExpr>(&e->node())) {
    if (v->name != name) return e;
    auto it = replacement.find(v->at);
    if (it == replacement.end())
      throw Error("substitution for " + name + " lacks role " + v->at.name);
    return it->second;
  }
  if (std::holds_alternative<LiftExpr>(e->node()) ||
      std::holds_alternative<VectorExpr>(e->node()))
    return e;
  const auto& app = std::get<AppExpr>(e->node());
  return Expr::app(subst_expr(app.fn, name, replacement),
                   subst_expr(app.arg, name, replacement));
}

ProgramPtr subst_program(const ProgramPtr& p, const std::string& name,
                         const std::map<Role, ExprPtr>& replacement) {
  if (auto* r = std::get_if<RetProg>(&p->node())) {
    std::map<Role, ExprPtr> rec;
    for (const auto& [role, e] : r->record)
      rec.emplace(role, subst_expr(e, name, replacement));
    return Program::ret(std::move(rec));
  }
  if (auto* l = std::get_if<LetProg>(&p->node())) {
    // Binders are globally unique in well-formed programs, so no capture.
    return Program::let(l->var, subst_program(l->bound, name, replacement),
                        subst_program(l->body, name, replacement));
  }
  const auto& c = std::get<CommProg>(p->node());
  return Program::comm(c.chan, subst_expr(c.msg, name, replacement),
                       subst_expr(c.dflt, name, replacement),
                       subst_expr(c.combine, name, replacement));
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

namespace {

struct Normalizer {
  int fresh = 0;

  // Graft a normalized continuation onto a normalized program: the result is
  // `let x = n1 in n2` rewritten into normal form.
  ProgramPtr graft(const ProgramPtr& n1, const std::string& x,
                   const ProgramPtr& n2) {
    if (auto* r = std::get_if<RetProg>(&n1->node()))
      return subst_program(n2, x, r->record);
    const auto& l = std::get<LetProg>(n1->node());
    return Program::let(l.var, l.bound, graft(l.body, x, n2));
  }

  ProgramPtr norm(const ProgramPtr& p) {
    if (std::holds_alternative<RetProg>(p->node())) return p;
    if (auto* l = std::get_if<LetProg>(&p->node()))
      return graft(norm(l->bound), l->var, norm(l->body));
    // A bare comm becomes `let t = comm in ret {R -> t_R}`.
    const auto& c = std::get<CommProg>(p->node());
    const Role receiver = c.dflt->situated_at();
    const std::string t = "%n" + std::to_string(fresh++);
    return Program::let(t, p,
                        Program::ret({{receiver, Expr::var(t, receiver)}}));
  }
};

}  // namespace

ProgramPtr normalize(const ProgramPtr& p) { return Normalizer{}.norm(p); }

bool is_normal_form(const Program& p) {
  const Program* cur = &p;
  while (true) {
    if (std::holds_alternative<RetProg>(cur->node())) return true;
    auto* l = std::get_if<LetProg>(&cur->node());
    if (!l) return false;
    if (!std::holds_alternative<CommProg>(l->bound->node())) return false;
    cur = l->body.get();
  }
}

// ---------------------------------------------------------------------------
// Protocol bodies
// ---------------------------------------------------------------------------

namespace {

ExprPtr rename_binders_expr(const ExprPtr& e, const std::string& suffix,
                            const std::set<std::string>& bound) {
  if (auto* v = std::get_if<VarExpr>(&e->node())) {
    if (bound.count(v->name)) return Expr::var(v->name + suffix, v->at);
    return e;
  }
  if (std::holds_alternative<LiftExpr>(e->node()) ||
      std::holds_alternative<VectorExpr>(e->node()))
    return e;
  const auto& app = std::get<AppExpr>(e->node());
  return Expr::app(rename_binders_expr(app.fn, suffix, bound),
                   rename_binders_expr(app.arg, suffix, bound));
}

ProgramPtr rename_program(const ProgramPtr& p, const std::string& suffix,
                          uint32_t iteration, std::set<std::string> bound) {
  if (auto* r = std::get_if<RetProg>(&p->node())) {
    std::map<Role, ExprPtr> rec;
    for (const auto& [role, e] : r->record)
      rec.emplace(role, rename_binders_expr(e, suffix, bound));
    return Program::ret(std::move(rec));
  }
  if (auto* l = std::get_if<LetProg>(&p->node())) {
    ProgramPtr b = rename_program(l->bound, suffix, iteration, bound);
    bound.insert(l->var);
    ProgramPtr body = rename_program(l->body, suffix, iteration, bound);
    return Program::let(l->var + suffix, std::move(b), std::move(body));
  }
  const auto& c = std::get<CommProg>(p->node());
  ChannelId chan{c.chan.base, iteration};
  return Program::comm(std::move(chan),
                       rename_binders_expr(c.msg, suffix, bound),
                       rename_binders_expr(c.dflt, suffix, bound),
                       rename_binders_expr(c.combine, suffix, bound));
}

// Freshen a body for iteration j: channels get iteration tag j, binders and
// the input variable get suffix #j (j = 0 keeps the original names).
ProtocolBody freshen(const ProtocolBody& b, uint32_t j) {
  if (j == 0) return b;
  const std::string suffix = "#" + std::to_string(j);
  ProtocolBody out = b;
  out.input_var = b.input_var + suffix;
  out.body = rename_program(b.body, suffix, j, {b.input_var});
  return out;
}

}  // namespace

ProtocolBody concat(const ProtocolBody& b1, const ProtocolBody& b2) {
  // p[lambda x'. p'] following the three defining equations, with the
  // per-role threading function applied to each returned expression.
  int fresh = 0;
  std::function<ProgramPtr(const ProgramPtr&)> go =
      [&](const ProgramPtr& p) -> ProgramPtr {
    if (auto* r = std::get_if<RetProg>(&p->node())) {
      std::map<Role, ExprPtr> replacement;
      for (const auto& [role, _] : b2.input_type) {
        auto it = r->record.find(role);
        if (it == r->record.end())
          throw Error("concat: first body returns nothing for role " + role.name);
        ExprPtr e = it->second;
        auto th = b1.thread.find(role);
        if (th != b1.thread.end()) e = Expr::app(Expr::lift(th->second, role), e);
        replacement.emplace(role, std::move(e));
      }
      return subst_program(b2.body, b2.input_var, replacement);
    }
    if (auto* l = std::get_if<LetProg>(&p->node()))
      return Program::let(l->var, l->bound, go(l->body));
    // comm case: let t = comm in p'[thread(t_R)/x'@R]
    const auto& c = std::get<CommProg>(p->node());
    const Role receiver = c.dflt->situated_at();
    const std::string t = b2.input_var + "%c" + std::to_string(fresh++);
    ExprPtr e = Expr::var(t, receiver);
    auto th = b1.thread.find(receiver);
    if (th != b1.thread.end()) e = Expr::app(Expr::lift(th->second, receiver), e);
    return Program::let(t, p,
                        subst_program(b2.body, b2.input_var, {{receiver, e}}));
  };

  ProtocolBody out;
  out.channel_bases = b1.channel_bases;
  out.channel_bases.insert(out.channel_bases.end(), b2.channel_bases.begin(),
                           b2.channel_bases.end());
  out.input_var = b1.input_var;
  out.input_type = b1.input_type;
  out.body = go(b1.body);
  out.thread = b2.thread;
  return out;
}

ProtocolBody iter(const ProtocolBody& b, uint32_t k) {
  ProtocolBody acc = freshen(b, k);
  for (uint32_t j = k; j-- > 0;) acc = concat(freshen(b, j), acc);
  return acc;
}

ProgramPtr close_with_inputs(const ProtocolBody& b,
                             const std::map<Role, std::vector<Value>>& inputs) {
  std::map<Role, ExprPtr> rec;
  for (const auto& [role, vals] : inputs)
    rec.emplace(role, Expr::vec(vals, role));
  return Program::let(b.input_var, Program::ret(std::move(rec)), b.body);
}

ProgramPtr close_program(
    const ProgramPtr& p,
    const std::vector<std::pair<std::string, std::map<Role, std::vector<Value>>>>&
        inputs) {
  ProgramPtr cur = p;
  for (auto it = inputs.rbegin(); it != inputs.rend(); ++it) {
    std::map<Role, ExprPtr> rec;
    for (const auto& [role, vals] : it->second)
      rec.emplace(role, Expr::vec(vals, role));
    cur = Program::let(it->first, Program::ret(std::move(rec)), cur);
  }
  return cur;
}

// ---------------------------------------------------------------------------
// JSON dump and hashing
// ---------------------------------------------------------------------------

namespace {

using json = nlohmann::json;

json expr_to_json(const Expr& e) {
  if (auto* v = std::get_if<VarExpr>(&e.node()))
    return json{{"var", v->name}, {"at", v->at.name}};
  if (auto* l = std::get_if<LiftExpr>(&e.node())) {
    if (auto* val = std::get_if<Value>(&l->term))
      return json{{"lift", val->to_json()}, {"at", l->at.name}};
    return json{{"fn", (*std::get_if<PureFnPtr>(&l->term))->name},
                {"at", l->at.name}};
  }
  if (auto* ve = std::get_if<VectorExpr>(&e.node())) {
    json items = json::array();
    for (const Value& v : ve->items) items.push_back(v.to_json());
    return json{{"vec", items}, {"at", ve->at.name}};
  }
  const auto& app = std::get<AppExpr>(e.node());
  return json{{"app", json::array({expr_to_json(*app.fn), expr_to_json(*app.arg)})}};
}

}  // namespace

json program_to_json(const Program& p) {
  if (auto* r = std::get_if<RetProg>(&p.node())) {
    json rec = json::object();
    for (const auto& [role, e] : r->record) rec[role.name] = expr_to_json(*e);
    return json{{"ret", rec}};
  }
  if (auto* l = std::get_if<LetProg>(&p.node()))
    return json{{"let", l->var},
                {"bound", program_to_json(*l->bound)},
                {"body", program_to_json(*l->body)}};
  const auto& c = std::get<CommProg>(p.node());
  return json{{"comm", c.chan.str()},
              {"msg", expr_to_json(*c.msg)},
              {"default", expr_to_json(*c.dflt)},
              {"combine", expr_to_json(*c.combine)}};
}

uint64_t program_hash(const Program& p) {
  const std::string s = program_to_json(p).dump();
  uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace choreo::hll
