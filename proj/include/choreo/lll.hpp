// The low-level per-node language: node program trees, their labeled
// transition semantics, and endpoint projection from the choreography.
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "choreo/hll.hpp"

namespace choreo::lll {

using values::Closure;
using values::SemValue;
using values::Value;

struct NodeLabel {
  enum class Kind { Send, Receive };
  Kind kind;
  hll::ChannelId chan;
  Value payload;            // Send
  std::vector<Value> msgs;  // Receive

  static NodeLabel send(hll::ChannelId c, Value v);
  static NodeLabel receive(hll::ChannelId c, std::vector<Value> msgs);
  bool operator==(const NodeLabel&) const = default;
  std::string str() const;
};

// ---------------------------------------------------------------------------
// Projected (role-erased) expressions, evaluated per node.
// ---------------------------------------------------------------------------
using ValueEnv = std::map<std::string, Value>;

class LocalExpr;
using LocalExprPtr = std::shared_ptr<const LocalExpr>;

struct LVar {
  std::string name;
};
struct LConst {
  std::variant<Value, values::PureFnPtr> term;
};
struct LVec {
  std::vector<Value> items;  // element chosen by node index
};
struct LApp {
  LocalExprPtr fn, arg;
};

class LocalExpr {
 public:
  using Node = std::variant<LVar, LConst, LVec, LApp>;
  static LocalExprPtr var(std::string name);
  static LocalExprPtr constant(Value v);
  static LocalExprPtr constant(values::PureFnPtr fn);
  static LocalExprPtr vec(std::vector<Value> items);
  static LocalExprPtr app(LocalExprPtr fn, LocalExprPtr arg);
  const Node& node() const { return node_; }
  explicit LocalExpr(Node n) : node_(std::move(n)) {}

 private:
  Node node_;
};

SemValue eval_local(const LocalExpr& e, const ValueEnv& env, uint32_t node_index);

// ---------------------------------------------------------------------------
// Linearized node code: the compiled form of a projected program. A node
// state is a position in this code plus an environment, which gives node
// programs decidable equality for state-space dedup.
// ---------------------------------------------------------------------------
struct NodeInstr {
  enum class Kind { Send, Recv, Assign };
  Kind kind;
  hll::ChannelId chan;  // Send/Recv
  LocalExprPtr a;       // Send: message; Recv: default; Assign: rhs
  LocalExprPtr b;       // Recv: combine
  std::string binder;   // Recv/Assign
};

struct NodeCode {
  std::vector<NodeInstr> instrs;
  LocalExprPtr result;
  // live[pc] = variables read at or after pc (live[instrs.size()] = result's).
  std::vector<std::set<std::string>> live;
};

std::shared_ptr<const NodeCode> compile_role(const hll::Program& p,
                                             const hll::Role& role);

// ---------------------------------------------------------------------------
// NodeProgram: return v | sendThen c v k | rcvThen c handler. Projection
// produces machine-backed values (code position + captured environment);
// bind over opaque continuations produces generic tree nodes.
// ---------------------------------------------------------------------------
class NodeProgram;

namespace detail {
struct NodeMachine {
  std::shared_ptr<const NodeCode> code;
  uint32_t index = 0;
  uint32_t pc = 0;
  ValueEnv env;
  std::optional<Value> current;  // Send payload or Return value
};
struct GNode;
}  // namespace detail

class NodeProgram {
 public:
  enum class Kind { Return, Send, Recv };

  static NodeProgram ret(Value v);
  static NodeProgram send_then(hll::ChannelId c, Value msg, NodeProgram next);
  static NodeProgram rcv_then(
      hll::ChannelId c,
      std::function<NodeProgram(std::span<const Value>)> handler);
  static NodeProgram from_code(std::shared_ptr<const NodeCode> code,
                               uint32_t node_index, ValueEnv env);

  Kind kind() const;
  const Value& return_value() const;        // Return
  const hll::ChannelId& channel() const;    // Send/Recv
  const Value& send_payload() const;        // Send
  NodeProgram after_send() const;           // Send
  NodeProgram apply_receive(std::span<const Value> msgs) const;  // Recv
  // For machine-backed receives: the combining closure and default value the
  // handler folds with.
  std::optional<std::pair<Closure, Value>> receive_fold() const;

  // The node transition relation; std::nullopt when the label is not enabled.
  std::optional<NodeProgram> step(const NodeLabel& l) const;

  bool machine_backed() const;
  // Canonical dedup identity (machine-backed only): code position plus the
  // live captured values.
  void append_state_key(std::string& out) const;
  bool operator==(const NodeProgram& other) const;

 private:
  using Machine = detail::NodeMachine;
  using GNodePtr = std::shared_ptr<const detail::GNode>;

  NodeProgram() = default;
  static NodeProgram normalized(Machine m);

  std::variant<Machine, GNodePtr> impl_;
};

// Appends f onto the leaves: every `return v` becomes f(v).
NodeProgram bind(const NodeProgram& t,
                 const std::function<NodeProgram(const Value&)>& f);

std::optional<NodeProgram> node_step(const NodeProgram& t, const NodeLabel& l);

// Endpoint projection for one node of a role. The builder is applied to the
// node's initial environment (free distributed variables, if any).
struct ProjectedNode {
  std::shared_ptr<const NodeCode> code;
  hll::Role role;
  uint32_t index = 0;
  NodeProgram instantiate(const ValueEnv& inputs = {}) const;
};
ProjectedNode project(const hll::ProgramPtr& p, const hll::Role& role,
                      uint32_t node_index);

// The ~_R relation: does the label sequence respect the channel order of
// delta for the given role (prefixes of respecting sequences accepted)?
bool respects_channel_order(std::span<const NodeLabel> labels,
                            const hll::ChannelContext& delta,
                            const hll::Role& role);

nlohmann::json node_label_to_json(const NodeLabel& l);

}  // namespace choreo::lll
