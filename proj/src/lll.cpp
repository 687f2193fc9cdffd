#include "choreo/lll.hpp"

#include <algorithm>
#include <sstream>

namespace choreo::lll {

using hll::AppExpr;
using hll::ChannelId;
using hll::CommProg;
using hll::Expr;
using hll::LetProg;
using hll::LiftExpr;
using hll::Program;
using hll::RetProg;
using hll::Role;
using hll::VarExpr;
using hll::VectorExpr;
using values::PureFnPtr;

// ---------------------------------------------------------------------------
// NodeLabel
// ---------------------------------------------------------------------------

NodeLabel NodeLabel::send(ChannelId c, Value v) {
  return NodeLabel{Kind::Send, std::move(c), std::move(v), {}};
}
NodeLabel NodeLabel::receive(ChannelId c, std::vector<Value> msgs) {
  return NodeLabel{Kind::Receive, std::move(c), Value::unit(), std::move(msgs)};
}

std::string NodeLabel::str() const {
  std::ostringstream os;
  if (kind == Kind::Send) {
    os << "send " << chan.str() << " " << payload.str();
  } else {
    os << "receive " << chan.str() << " [";
    for (size_t i = 0; i < msgs.size(); ++i) os << (i ? " " : "") << msgs[i].str();
    os << "]";
  }
  return os.str();
}

nlohmann::json node_label_to_json(const NodeLabel& l) {
  if (l.kind == NodeLabel::Kind::Send)
    return {{"kind", "send"}, {"chan", l.chan.str()}, {"v", l.payload.to_json()}};
  nlohmann::json msgs = nlohmann::json::array();
  for (const Value& v : l.msgs) msgs.push_back(v.to_json());
  return {{"kind", "receive"}, {"chan", l.chan.str()}, {"msgs", msgs}};
}

// ---------------------------------------------------------------------------
// LocalExpr
// ---------------------------------------------------------------------------

LocalExprPtr LocalExpr::var(std::string name) {
  return std::make_shared<LocalExpr>(Node{LVar{std::move(name)}});
}
LocalExprPtr LocalExpr::constant(Value v) {
  return std::make_shared<LocalExpr>(Node{LConst{std::move(v)}});
}
LocalExprPtr LocalExpr::constant(PureFnPtr fn) {
  return std::make_shared<LocalExpr>(Node{LConst{std::move(fn)}});
}
LocalExprPtr LocalExpr::vec(std::vector<Value> items) {
  return std::make_shared<LocalExpr>(Node{LVec{std::move(items)}});
}
LocalExprPtr LocalExpr::app(LocalExprPtr fn, LocalExprPtr arg) {
  return std::make_shared<LocalExpr>(Node{LApp{std::move(fn), std::move(arg)}});
}

SemValue eval_local(const LocalExpr& e, const ValueEnv& env, uint32_t node_index) {
  if (auto* v = std::get_if<LVar>(&e.node())) {
    auto it = env.find(v->name);
    if (it == env.end()) throw Error("node: unbound variable " + v->name);
    return it->second;
  }
  if (auto* c = std::get_if<LConst>(&e.node())) {
    if (auto* val = std::get_if<Value>(&c->term)) return *val;
    return Closure(std::get<PureFnPtr>(c->term));
  }
  if (auto* ve = std::get_if<LVec>(&e.node())) {
    if (node_index >= ve->items.size())
      throw Error("vector literal too short for node index " +
                  std::to_string(node_index));
    return ve->items[node_index];
  }
  const auto& app = std::get<LApp>(e.node());
  SemValue f = eval_local(*app.fn, env, node_index);
  SemValue x = eval_local(*app.arg, env, node_index);
  auto* cl = std::get_if<Closure>(&f);
  if (!cl) throw Error("node: application of a non-function");
  return values::apply_one(*cl, values::ground(x));
}

// ---------------------------------------------------------------------------
// Compilation (endpoint projection, linearized)
// ---------------------------------------------------------------------------

namespace {

void local_vars(const LocalExpr& e, std::set<std::string>& out) {
  if (auto* v = std::get_if<LVar>(&e.node())) {
    out.insert(v->name);
    return;
  }
  if (auto* app = std::get_if<LApp>(&e.node())) {
    local_vars(*app->fn, out);
    local_vars(*app->arg, out);
  }
}

LocalExprPtr compile_expr(const Expr& e) {
  if (auto* v = std::get_if<VarExpr>(&e.node())) return LocalExpr::var(v->name);
  if (auto* l = std::get_if<LiftExpr>(&e.node())) {
    if (auto* val = std::get_if<Value>(&l->term)) return LocalExpr::constant(*val);
    return LocalExpr::constant(std::get<PureFnPtr>(l->term));
  }
  if (auto* ve = std::get_if<VectorExpr>(&e.node())) return LocalExpr::vec(ve->items);
  const auto& app = std::get<AppExpr>(e.node());
  return LocalExpr::app(compile_expr(*app.fn), compile_expr(*app.arg));
}

struct Compiler {
  const Role& role;
  std::vector<NodeInstr> instrs;
  int fresh = 0;

  // Emits the instructions of p and returns the expression for its result at
  // this role (unit when the role gets nothing).
  LocalExprPtr go(const Program& p) {
    if (auto* r = std::get_if<RetProg>(&p.node())) {
      auto it = r->record.find(role);
      if (it == r->record.end()) return LocalExpr::constant(Value::unit());
      return compile_expr(*it->second);
    }
    if (auto* l = std::get_if<LetProg>(&p.node())) {
      LocalExprPtr bound = go(*l->bound);
      instrs.push_back(NodeInstr{NodeInstr::Kind::Assign, {}, bound, nullptr, l->var});
      return go(*l->body);
    }
    const auto& c = std::get<CommProg>(p.node());
    const Role sender = c.msg->situated_at();
    const Role receiver = c.dflt->situated_at();
    const bool sends = sender == role;
    const bool receives = receiver == role;
    if (sends)
      instrs.push_back(
          NodeInstr{NodeInstr::Kind::Send, c.chan, compile_expr(*c.msg), nullptr, {}});
    if (receives) {
      std::string t = "%r" + std::to_string(fresh++);
      instrs.push_back(NodeInstr{NodeInstr::Kind::Recv, c.chan,
                                 compile_expr(*c.dflt), compile_expr(*c.combine),
                                 t});
      return LocalExpr::var(std::move(t));
    }
    return LocalExpr::constant(Value::unit());
  }
};

}  // namespace

std::shared_ptr<const NodeCode> compile_role(const Program& p, const Role& role) {
  Compiler c{role};
  LocalExprPtr result = c.go(p);
  auto code = std::make_shared<NodeCode>();
  code->instrs = std::move(c.instrs);
  code->result = std::move(result);
  // Backward liveness.
  code->live.resize(code->instrs.size() + 1);
  std::set<std::string> live;
  local_vars(*code->result, live);
  code->live.back() = live;
  for (size_t i = code->instrs.size(); i-- > 0;) {
    const NodeInstr& ins = code->instrs[i];
    if (!ins.binder.empty()) live.erase(ins.binder);
    if (ins.a) local_vars(*ins.a, live);
    if (ins.b) local_vars(*ins.b, live);
    code->live[i] = live;
  }
  return code;
}

// ---------------------------------------------------------------------------
// NodeProgram
// ---------------------------------------------------------------------------

struct detail::GNode {
  NodeProgram::Kind kind;
  Value value;  // Return value or Send payload
  ChannelId chan;
  std::shared_ptr<const NodeProgram> next;  // Send
  std::function<NodeProgram(std::span<const Value>)> handler;  // Recv
};

NodeProgram NodeProgram::ret(Value v) {
  NodeProgram t;
  t.impl_ = std::make_shared<const detail::GNode>(detail::GNode{Kind::Return, std::move(v), {}, nullptr, {}});
  return t;
}

NodeProgram NodeProgram::send_then(ChannelId c, Value msg, NodeProgram next) {
  NodeProgram t;
  t.impl_ = std::make_shared<const detail::GNode>(
      detail::GNode{Kind::Send, std::move(msg), std::move(c),
            std::make_shared<const NodeProgram>(std::move(next)), {}});
  return t;
}

NodeProgram NodeProgram::rcv_then(
    ChannelId c, std::function<NodeProgram(std::span<const Value>)> handler) {
  NodeProgram t;
  t.impl_ = std::make_shared<const detail::GNode>(
      detail::GNode{Kind::Recv, Value::unit(), std::move(c), nullptr, std::move(handler)});
  return t;
}

NodeProgram NodeProgram::from_code(std::shared_ptr<const NodeCode> code,
                                   uint32_t node_index, ValueEnv env) {
  Machine m;
  m.code = std::move(code);
  m.index = node_index;
  m.pc = 0;
  m.env = std::move(env);
  return normalized(std::move(m));
}

// Run administrative assignments, restrict the environment to live variables,
// and cache the observable value at the stopping point.
NodeProgram NodeProgram::normalized(Machine m) {
  const auto& instrs = m.code->instrs;
  while (m.pc < instrs.size() && instrs[m.pc].kind == NodeInstr::Kind::Assign) {
    const NodeInstr& ins = instrs[m.pc];
    Value v = values::ground(eval_local(*ins.a, m.env, m.index));
    m.env[ins.binder] = std::move(v);
    m.pc++;
  }
  const std::set<std::string>& live = m.code->live[m.pc];
  for (auto it = m.env.begin(); it != m.env.end();) {
    if (!live.count(it->first))
      it = m.env.erase(it);
    else
      ++it;
  }
  if (m.pc == instrs.size())
    m.current = values::ground(eval_local(*m.code->result, m.env, m.index));
  else if (instrs[m.pc].kind == NodeInstr::Kind::Send)
    m.current = values::ground(eval_local(*instrs[m.pc].a, m.env, m.index));
  NodeProgram t;
  t.impl_ = std::move(m);
  return t;
}

NodeProgram::Kind NodeProgram::kind() const {
  if (auto* m = std::get_if<Machine>(&impl_)) {
    if (m->pc == m->code->instrs.size()) return Kind::Return;
    return m->code->instrs[m->pc].kind == NodeInstr::Kind::Send ? Kind::Send
                                                                : Kind::Recv;
  }
  return std::get<GNodePtr>(impl_)->kind;
}

const Value& NodeProgram::return_value() const {
  if (kind() != Kind::Return) throw Error("return_value on a non-return node");
  if (auto* m = std::get_if<Machine>(&impl_)) return *m->current;
  return std::get<GNodePtr>(impl_)->value;
}

const ChannelId& NodeProgram::channel() const {
  if (auto* m = std::get_if<Machine>(&impl_)) {
    if (m->pc == m->code->instrs.size()) throw Error("channel on a return node");
    return m->code->instrs[m->pc].chan;
  }
  const auto& g = std::get<GNodePtr>(impl_);
  if (g->kind == Kind::Return) throw Error("channel on a return node");
  return g->chan;
}

const Value& NodeProgram::send_payload() const {
  if (kind() != Kind::Send) throw Error("send_payload on a non-send node");
  if (auto* m = std::get_if<Machine>(&impl_)) return *m->current;
  return std::get<GNodePtr>(impl_)->value;
}

NodeProgram NodeProgram::after_send() const {
  if (kind() != Kind::Send) throw Error("after_send on a non-send node");
  if (auto* m = std::get_if<Machine>(&impl_)) {
    Machine next = *m;
    next.pc++;
    next.current.reset();
    return normalized(std::move(next));
  }
  return *std::get<GNodePtr>(impl_)->next;
}

NodeProgram NodeProgram::apply_receive(std::span<const Value> msgs) const {
  if (kind() != Kind::Recv) throw Error("apply_receive on a non-receive node");
  if (auto* m = std::get_if<Machine>(&impl_)) {
    const NodeInstr& ins = m->code->instrs[m->pc];
    SemValue combine = eval_local(*ins.b, m->env, m->index);
    auto* cl = std::get_if<Closure>(&combine);
    if (!cl) throw Error("receive combine is not a function");
    Value dflt = values::ground(eval_local(*ins.a, m->env, m->index));
    Value folded = values::fold(*cl, dflt, msgs);
    Machine next = *m;
    next.pc++;
    next.current.reset();
    next.env[ins.binder] = std::move(folded);
    return normalized(std::move(next));
  }
  return std::get<GNodePtr>(impl_)->handler(msgs);
}

std::optional<std::pair<Closure, Value>> NodeProgram::receive_fold() const {
  if (kind() != Kind::Recv) return std::nullopt;
  auto* m = std::get_if<Machine>(&impl_);
  if (!m) return std::nullopt;
  const NodeInstr& ins = m->code->instrs[m->pc];
  SemValue combine = eval_local(*ins.b, m->env, m->index);
  auto* cl = std::get_if<Closure>(&combine);
  if (!cl) throw Error("receive combine is not a function");
  Value dflt = values::ground(eval_local(*ins.a, m->env, m->index));
  return std::make_pair(*cl, std::move(dflt));
}

std::optional<NodeProgram> NodeProgram::step(const NodeLabel& l) const {
  switch (kind()) {
    case Kind::Return: return std::nullopt;
    case Kind::Send:
      if (l.kind != NodeLabel::Kind::Send || !(l.chan == channel()) ||
          !(l.payload == send_payload()))
        return std::nullopt;
      return after_send();
    case Kind::Recv:
      if (l.kind != NodeLabel::Kind::Receive || !(l.chan == channel()))
        return std::nullopt;
      return apply_receive(l.msgs);
  }
  return std::nullopt;
}

bool NodeProgram::machine_backed() const {
  return std::holds_alternative<Machine>(impl_);
}

void NodeProgram::append_state_key(std::string& out) const {
  if (auto* m = std::get_if<Machine>(&impl_)) {
    out += "@" + std::to_string(m->pc);
    for (const auto& [name, v] : m->env) out += "|" + name + "=" + v.str();
    return;
  }
  // Generic nodes have only identity; stable within a process run.
  std::ostringstream os;
  os << "G" << std::get<GNodePtr>(impl_).get();
  out += os.str();
}

bool NodeProgram::operator==(const NodeProgram& other) const {
  auto* m1 = std::get_if<Machine>(&impl_);
  auto* m2 = std::get_if<Machine>(&other.impl_);
  if (m1 && m2)
    return m1->code == m2->code && m1->index == m2->index && m1->pc == m2->pc &&
           m1->env == m2->env;
  if (!m1 && !m2)
    return std::get<GNodePtr>(impl_) == std::get<GNodePtr>(other.impl_);
  return false;
}

NodeProgram bind(const NodeProgram& t,
                 const std::function<NodeProgram(const Value&)>& f) {
  switch (t.kind()) {
    case NodeProgram::Kind::Return: return f(t.return_value());
    case NodeProgram::Kind::Send:
      return NodeProgram::send_then(t.channel(), t.send_payload(),
                                    choreo::lll::bind(t.after_send(), f));
    case NodeProgram::Kind::Recv:
      return NodeProgram::rcv_then(
          t.channel(), [t, f](std::span<const Value> msgs) -> NodeProgram {
            return choreo::lll::bind(t.apply_receive(msgs), f);
          });
  }
  throw Error("unreachable");
}

std::optional<NodeProgram> node_step(const NodeProgram& t, const NodeLabel& l) {
  return t.step(l);
}

NodeProgram ProjectedNode::instantiate(const ValueEnv& inputs) const {
  return NodeProgram::from_code(code, index, inputs);
}

ProjectedNode project(const hll::ProgramPtr& p, const Role& role,
                      uint32_t node_index) {
  return ProjectedNode{compile_role(*p, role), role, node_index};
}

// ---------------------------------------------------------------------------
// ~_R: label sequences respecting the channel context order
// ---------------------------------------------------------------------------

bool respects_channel_order(std::span<const NodeLabel> labels,
                            const hll::ChannelContext& delta,
                            const hll::Role& role) {
  size_t i = 0;
  for (const hll::ChannelEntry& entry : delta) {
    if (i == labels.size()) return true;  // a prefix is acceptable
    const bool sends = entry.sender == role;
    const bool receives = entry.receiver == role;
    if (!sends && !receives) continue;
    if (sends) {
      if (labels[i].kind != NodeLabel::Kind::Send || !(labels[i].chan == entry.id))
        return false;
      ++i;
    }
    if (receives) {
      if (i == labels.size()) return true;
      if (labels[i].kind != NodeLabel::Kind::Receive ||
          !(labels[i].chan == entry.id))
        return false;
      ++i;
    }
  }
  return i == labels.size();
}

}  // namespace choreo::lll
