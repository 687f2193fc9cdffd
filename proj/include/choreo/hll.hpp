// The choreographic language: AST, typing judgment with ordered channel
// contexts, let-comm normalization, and the iteration machinery for
// non-terminating protocols.
#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "choreo/values.hpp"

namespace choreo::hll {

using values::PureFnPtr;
using values::Value;
using values::ValueType;

struct Role {
  std::string name;
  auto operator<=>(const Role&) const = default;
};

// Channel identity: a base name plus an iteration suffix generated by iter().
struct ChannelId {
  std::string base;
  uint32_t iteration = 0;
  auto operator<=>(const ChannelId&) const = default;
  std::string str() const {
    return iteration == 0 ? base : base + "#" + std::to_string(iteration);
  }
};

// ---------------------------------------------------------------------------
// Expressions. Every expression is situated at exactly one role, derivable
// from its leaves.
// ---------------------------------------------------------------------------
class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct VarExpr {
  std::string name;
  Role at;
};
struct LiftExpr {
  std::variant<Value, PureFnPtr> term;
  Role at;
};
struct VectorExpr {
  std::vector<Value> items;
  Role at;
};
struct AppExpr {
  ExprPtr fn;
  ExprPtr arg;
};

class Expr {
 public:
  using Node = std::variant<VarExpr, LiftExpr, VectorExpr, AppExpr>;

  static ExprPtr var(std::string name, Role at);
  static ExprPtr lift(Value v, Role at);
  static ExprPtr lift(PureFnPtr fn, Role at);
  static ExprPtr vec(std::vector<Value> items, Role at);
  static ExprPtr app(ExprPtr fn, ExprPtr arg);
  // f applied to several arguments, left-associated.
  static ExprPtr apps(ExprPtr fn, std::initializer_list<ExprPtr> args);

  const Node& node() const { return node_; }
  Role situated_at() const;

  explicit Expr(Node n) : node_(std::move(n)) {}

 private:
  Node node_;
};

// ---------------------------------------------------------------------------
// Programs.
// ---------------------------------------------------------------------------
class Program;
using ProgramPtr = std::shared_ptr<const Program>;

struct RetProg {
  std::map<Role, ExprPtr> record;
};
struct LetProg {
  std::string var;
  ProgramPtr bound;
  ProgramPtr body;
};
struct CommProg {
  ChannelId chan;
  ExprPtr msg;      // situated at the sender role
  ExprPtr dflt;     // situated at the receiver role
  ExprPtr combine;  // situated at the receiver role
};

class Program {
 public:
  using Node = std::variant<RetProg, LetProg, CommProg>;

  static ProgramPtr ret(std::map<Role, ExprPtr> record);
  static ProgramPtr let(std::string var, ProgramPtr bound, ProgramPtr body);
  static ProgramPtr comm(ChannelId chan, ExprPtr msg, ExprPtr dflt,
                         ExprPtr combine);

  const Node& node() const { return node_; }

  explicit Program(Node n) : node_(std::move(n)) {}

 private:
  Node node_;
};

// ---------------------------------------------------------------------------
// Types for the typing judgment.
// ---------------------------------------------------------------------------

// Expression types: ground value types plus arrows for (partially applied)
// lifted functions. Channel message types and record fields are always ground.
class ExprType {
 public:
  static ExprType data(ValueType t);
  static ExprType arrow(ExprType arg, ExprType res);
  static ExprType of_fn(const values::PureFn& fn);  // curried arrow chain

  bool is_data() const { return data_.has_value(); }
  const ValueType& value_type() const;
  const ExprType& arg() const;
  const ExprType& res() const;

  bool operator==(const ExprType& other) const;
  std::string str() const;

 private:
  std::optional<ValueType> data_;
  std::shared_ptr<const ExprType> arg_, res_;
};

using RecordType = std::map<Role, ValueType>;

struct ChannelEntry {
  ChannelId id;
  Role sender;
  Role receiver;
  ValueType msg_type;
  bool operator==(const ChannelEntry&) const = default;
};
using ChannelContext = std::vector<ChannelEntry>;

using TypeEnv = std::map<std::string, RecordType>;
using RoleSet = std::set<Role>;

enum class TypeErrorCode {
  UnknownVariable,
  RoleNotInRecord,
  ApplicationMismatch,
  HigherOrderArgument,
  RoleMismatch,
  UnknownRole,
  EmptyRecord,
  NotGround,
  ChannelReuse,
  DuplicateBinding,
  BadCombineType,
  EmptyVectorLiteral,
};

class TypeError : public Error {
 public:
  TypeError(TypeErrorCode code, const std::string& what)
      : Error(what), code_(code) {}
  TypeErrorCode code() const { return code_; }

 private:
  TypeErrorCode code_;
};

// Result of typechecking a program, with per-Comm annotations keyed by node
// identity (valid while the program tree is alive).
struct CommTyping {
  Role sender;
  Role receiver;
  ValueType msg_type;
  ValueType result_type;  // fold accumulator type
};
struct Typing {
  ChannelContext channels;
  RecordType result;
  std::map<const Program*, CommTyping> comms;
};

ExprType typecheck_expr(const TypeEnv& gamma, const Role& role, const Expr& e);
Typing typecheck_prog(const TypeEnv& gamma, const RoleSet& roles,
                      const Program& p);

// ---------------------------------------------------------------------------
// Substitution and normalization.
// ---------------------------------------------------------------------------

// Replace every free occurrence of Var(name, R) with replacement.at(R).
ExprPtr subst_expr(const ExprPtr& e, const std::string& name,
                   const std::map<Role, ExprPtr>& replacement);
ProgramPtr subst_program(const ProgramPtr& p, const std::string& name,
                         const std::map<Role, ExprPtr>& replacement);

// Let-comm normal form: Let(x1, Comm..., Let(x2, Comm..., ... Ret{...})).
// Denotation-preserving (monadic-law flattening plus Ret inlining).
ProgramPtr normalize(const ProgramPtr& p);
bool is_normal_form(const Program& p);

// ---------------------------------------------------------------------------
// Protocol bodies: nu c1..cn. lambda x. p with an optional per-role threading
// function feeding each role's returned value into the next iteration.
// ---------------------------------------------------------------------------
struct ProtocolBody {
  std::vector<std::string> channel_bases;
  std::string input_var;
  RecordType input_type;
  ProgramPtr body;
  // Applied to the role's returned expression before it becomes the next
  // iteration's input; roles absent here thread unchanged.
  std::map<Role, PureFnPtr> thread;
};

// Monadic protocol-body concatenation b1 ++ b2; binder and channel names must
// already be disjoint (iter takes care of freshening).
ProtocolBody concat(const ProtocolBody& b1, const ProtocolBody& b2);
// b^0 = b; b^{k+1} = b ++ b^k, with fresh channel and binder names per
// iteration (suffix #j for iteration j > 0).
ProtocolBody iter(const ProtocolBody& b, uint32_t k);

// Close a body by binding its input variable to per-role vector literals.
ProgramPtr close_with_inputs(const ProtocolBody& b,
                             const std::map<Role, std::vector<Value>>& inputs);
// Same for a program with several free variables.
ProgramPtr close_program(const ProgramPtr& p,
                         const std::vector<std::pair<std::string, std::map<Role, std::vector<Value>>>>& inputs);

// Debug dump (not a parsing surface) and a stable structural hash.
nlohmann::json program_to_json(const Program& p);
uint64_t program_hash(const Program& p);

}  // namespace choreo::hll
