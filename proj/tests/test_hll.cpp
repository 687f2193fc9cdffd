#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <functional>

#include "choreo/denote.hpp"
#include "choreo/hll.hpp"
#include "choreo/protocols.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace choreo;
using namespace choreo::hll;
using protocols::kLeader;
using protocols::kReplica;
using tu::F;
using tu::T;
using values::Value;
using values::ValueType;

namespace {

TypeErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const TypeError& e) {
    return e.code();
  }
  throw std::runtime_error("no TypeError raised");
}

size_t count_comms(const Program& p, std::map<ChannelId, int>& uses) {
  if (std::holds_alternative<RetProg>(p.node())) return 0;
  if (auto* l = std::get_if<LetProg>(&p.node()))
    return count_comms(*l->bound, uses) + count_comms(*l->body, uses);
  uses[std::get<CommProg>(p.node()).chan]++;
  return 1;
}

}  // namespace

TEST_CASE("typecheck_expr basic judgments") {
  const TypeEnv gamma{{"x", {{kReplica, ValueType::bool_type()}}}};
  CHECK(typecheck_expr(gamma, kReplica, *Expr::var("x", kReplica)) ==
        ExprType::data(ValueType::bool_type()));
  CHECK(typecheck_expr({}, kReplica, *Expr::lift(T(), kReplica)) ==
        ExprType::data(ValueType::bool_type()));
  CHECK(code_of([&] { typecheck_expr(gamma, kLeader, *Expr::var("x", kLeader)); }) ==
        TypeErrorCode::RoleNotInRecord);
  CHECK(code_of([&] { typecheck_expr({}, kReplica, *Expr::var("y", kReplica)); }) ==
        TypeErrorCode::UnknownVariable);
  CHECK(code_of([&] {
          typecheck_expr({}, kReplica,
                         *Expr::app(Expr::lift(T(), kReplica),
                                    Expr::lift(F(), kReplica)));
        }) == TypeErrorCode::ApplicationMismatch);
}

TEST_CASE("typecheck_expr applications through lifted functions") {
  auto sv = protocols::SimpleVote::make(4, 1);
  const TypeEnv gamma = sv.gamma;
  // fcnteq p : nat -> bool -> nat (partial application has an arrow type)
  const ExprPtr partial =
      Expr::app(Expr::lift(sv.registry.get("fcnteq"), kLeader), Expr::var("p", kLeader));
  const ExprType t = typecheck_expr(gamma, kLeader, *partial);
  CHECK_FALSE(t.is_data());
  CHECK(t.arg() == ExprType::data(ValueType::nat_type(4)));
  // Wrong argument type is rejected.
  CHECK(code_of([&] {
          typecheck_expr(gamma, kLeader,
                         *Expr::app(partial, Expr::lift(T(), kLeader)));
        }) == TypeErrorCode::ApplicationMismatch);
}

TEST_CASE("SimpleVote typing golden") {
  auto sv = protocols::SimpleVote::make(4, 1);
  const Typing t = typecheck_prog(sv.gamma, sv.roles, *sv.program);
  REQUIRE(t.channels.size() == 1);
  CHECK(t.channels[0].id == ChannelId{"c"});
  CHECK(t.channels[0].sender == kReplica);
  CHECK(t.channels[0].receiver == kLeader);
  CHECK(t.channels[0].msg_type == ValueType::bool_type());
  CHECK(t.result ==
        RecordType{{kLeader, ValueType::option(ValueType::bool_type())}});
}

TEST_CASE("ret with no communication has an empty channel context") {
  const auto p = Program::ret({{kLeader, Expr::lift(Value::unit(), kLeader)}});
  const Typing t = typecheck_prog({}, {kLeader}, *p);
  CHECK(t.channels.empty());
  CHECK(t.result == RecordType{{kLeader, ValueType::unit_type()}});
}

TEST_CASE("channel reuse and rebinding are rejected") {
  auto sv = protocols::SimpleVote::make(4, 1);
  auto fcnteq = sv.registry.get("fcnteq");
  auto comm = [&](const std::string& chan) {
    return Program::comm(ChannelId{chan}, Expr::var("x", kReplica),
                         Expr::lift(Value::nat(0, 4), kLeader),
                         Expr::app(Expr::lift(fcnteq, kLeader),
                                   Expr::var("p", kLeader)));
  };
  const auto reuse = Program::let(
      "a", comm("c"),
      Program::let("b", comm("c"),
                   Program::ret({{kLeader, Expr::var("b", kLeader)}})));
  CHECK(code_of([&] { typecheck_prog(sv.gamma, sv.roles, *reuse); }) ==
        TypeErrorCode::ChannelReuse);

  const auto rebind = Program::let(
      "a", comm("c1"),
      Program::let("a", comm("c2"),
                   Program::ret({{kLeader, Expr::var("a", kLeader)}})));
  CHECK(code_of([&] { typecheck_prog(sv.gamma, sv.roles, *rebind); }) ==
        TypeErrorCode::DuplicateBinding);
}

TEST_CASE("normalize flattens nested lets into a let-comm chain") {
  auto sv = protocols::SimpleVote::make(4, 1);
  auto fcnteq = sv.registry.get("fcnteq");
  auto comm = [&](const std::string& chan) {
    return Program::comm(ChannelId{chan}, Expr::var("x", kReplica),
                         Expr::lift(Value::nat(0, 4), kLeader),
                         Expr::app(Expr::lift(fcnteq, kLeader),
                                   Expr::var("p", kLeader)));
  };
  // let a = (let b = C1 in C2) in ret {L -> a}
  const auto nested = Program::let(
      "a", Program::let("b", comm("c1"), comm("c2")),
      Program::ret({{kLeader, Expr::var("a", kLeader)}}));
  const auto norm = normalize(nested);
  CHECK(is_normal_form(*norm));
  CHECK_FALSE(is_normal_form(*nested));
  const Typing t1 = typecheck_prog(sv.gamma, sv.roles, *nested);
  const Typing t2 = typecheck_prog(sv.gamma, sv.roles, *norm);
  CHECK(t1.result == t2.result);
  REQUIRE(t1.channels.size() == t2.channels.size());
  for (size_t i = 0; i < t1.channels.size(); ++i)
    CHECK(t1.channels[i] == t2.channels[i]);

  // Denotations agree on a small configuration.
  const auto cfg = protocols::SimpleVote::config(3, 1, 1);
  const denote::Env env{{"p", {{kLeader, {T()}}}},
                        {"x", {{kReplica, tu::bools({true, false})}}}};
  CHECK(denote::denote_prog(cfg, env, nested) == denote::denote_prog(cfg, env, norm));
}

TEST_CASE("normalize keeps ret programs unchanged") {
  const auto p = Program::ret({{kLeader, Expr::lift(T(), kLeader)}});
  CHECK(normalize(p) == p);
}

TEST_CASE("normalizing SeqPaxos gives a three-deep let-comm chain") {
  auto sp = protocols::SeqPaxos::make(2, 1, 2, 0);
  const auto norm = normalize(sp.body.body);
  CHECK(is_normal_form(*norm));
  std::map<ChannelId, int> uses;
  CHECK(count_comms(*norm, uses) == 3);

  const TypeEnv gamma{{"x", sp.body.input_type}};
  const RoleSet roles{kLeader, kReplica};
  const Typing t1 = typecheck_prog(gamma, roles, *sp.body.body);
  const Typing t2 = typecheck_prog(gamma, roles, *norm);
  CHECK(t1.result == t2.result);
  // Same multiset of channel entries.
  auto entry_key = [](const ChannelEntry& e) {
    return e.id.str() + ":" + e.sender.name + ">" + e.receiver.name + ":" +
           e.msg_type.str();
  };
  std::multiset<std::string> m1, m2;
  for (const auto& e : t1.channels) m1.insert(entry_key(e));
  for (const auto& e : t2.channels) m2.insert(entry_key(e));
  CHECK(m1 == m2);

  const auto cfg = protocols::SeqPaxos::config(2, 1);
  const denote::Env env{{"x",
                         {{kLeader, {Value::nat(1, sp.round_max)}},
                          {kReplica, {sp.state_value(std::nullopt, 0),
                                      sp.state_value(std::nullopt, 0)}}}}};
  CHECK(denote::denote_prog(cfg, env, sp.body.body) ==
        denote::denote_prog(cfg, env, norm));
}

TEST_CASE("denotation is preserved by normalize for the protocol suite") {
  // Bosco body, one iteration, tiny config.
  auto bos = protocols::Bosco::make(3, 1);
  const auto norm = normalize(bos.body.body);
  const auto cfg = protocols::Bosco::config(3, 1, 1);
  const denote::Env env{{"v", {{kReplica, tu::bools({true, false})}}}};
  CHECK(denote::denote_prog(cfg, env, bos.body.body) ==
        denote::denote_prog(cfg, env, norm));

  auto sv = protocols::SimpleVote::make(4, 1);
  const auto svn = normalize(sv.program);
  const auto svcfg = protocols::SimpleVote::config(4, 1, 1);
  const denote::Env svenv{{"p", {{kLeader, {T()}}}},
                          {"x", {{kReplica, tu::bools({true, true, false})}}}};
  CHECK(denote::denote_prog(svcfg, svenv, sv.program) ==
        denote::denote_prog(svcfg, svenv, svn));

  // Iterated bodies normalize denotation-preservingly too.
  const ProtocolBody b1 = iter(bos.body, 1);
  const auto b1n = normalize(b1.body);
  CHECK(is_normal_form(*b1n));
  CHECK(denote::denote_prog(cfg, env, b1.body) ==
        denote::denote_prog(cfg, env, b1n));
}

TEST_CASE("concat substitutes returned expressions into the next body") {
  auto bos = protocols::Bosco::make(3, 1);
  // b1 returns the input unchanged; concatenation with the Bosco body must be
  // the Bosco body with the input substituted (here: the same program).
  ProtocolBody ident;
  ident.channel_bases = {};
  ident.input_var = "w";
  ident.input_type = {{kReplica, ValueType::bool_type()}};
  ident.body = Program::ret({{kReplica, Expr::var("w", kReplica)}});

  const ProtocolBody joined = concat(ident, bos.body);
  CHECK(program_to_json(*joined.body).dump() ==
        program_to_json(*subst_program(bos.body.body, "v",
                                       {{kReplica, Expr::var("w", kReplica)}}))
            .dump());
}

TEST_CASE("concat with the identity body is a right identity denotationally") {
  auto bos = protocols::Bosco::make(3, 1);
  ProtocolBody ident;
  ident.input_var = "w";
  ident.input_type = {{kReplica, bos.decision_type}};
  ident.body = Program::ret({{kReplica, Expr::var("w", kReplica)}});

  ProtocolBody b1 = bos.body;
  b1.thread = {};  // thread unchanged into the identity
  const ProtocolBody joined = concat(b1, ident);
  const auto cfg = protocols::Bosco::config(3, 1, 1);
  const denote::Env env{{"v", {{kReplica, tu::bools({true, false})}}}};
  CHECK(denote::denote_prog(cfg, env, joined.body) ==
        denote::denote_prog(cfg, env, bos.body.body));
}

TEST_CASE("iter generates fresh channels per iteration") {
  auto bos = protocols::Bosco::make(3, 1);
  CHECK(program_to_json(*iter(bos.body, 0).body).dump() ==
        program_to_json(*bos.body.body).dump());

  const ProtocolBody b1 = iter(bos.body, 1);
  const TypeEnv gamma{{"v", bos.body.input_type}};
  const Typing t = typecheck_prog(gamma, {kReplica}, *b1.body);
  REQUIRE(t.channels.size() == 2);
  CHECK(t.channels[0].id == ChannelId{"c", 0});
  CHECK(t.channels[1].id == ChannelId{"c", 1});
}

TEST_CASE("iterated SeqPaxos keeps channels in delta order") {
  auto sp = protocols::SeqPaxos::make(2, 1, 2, 2);
  const ProtocolBody b2 = iter(sp.body, 2);
  const TypeEnv gamma{{"x", sp.body.input_type}};
  const Typing t = typecheck_prog(gamma, {kLeader, kReplica}, *b2.body);
  REQUIRE(t.channels.size() == 9);
  const std::vector<ChannelId> want = {
      {"c1", 0}, {"c2", 0}, {"c3", 0}, {"c1", 1}, {"c2", 1},
      {"c3", 1}, {"c1", 2}, {"c2", 2}, {"c3", 2}};
  for (size_t i = 0; i < want.size(); ++i) CHECK(t.channels[i].id == want[i]);
}

TEST_CASE("iter typechecks up to three unrollings for both protocols") {
  auto bos = protocols::Bosco::make(4, 1);
  auto sp = protocols::SeqPaxos::make(3, 1, 2, 3);
  for (uint32_t k = 0; k <= 3; ++k) {
    const ProtocolBody bb = iter(bos.body, k);
    const Typing tb =
        typecheck_prog({{"v", bos.body.input_type}}, {kReplica}, *bb.body);
    CHECK(tb.channels.size() == k + 1);
    const ProtocolBody sb = iter(sp.body, k);
    const Typing ts = typecheck_prog({{"x", sp.body.input_type}},
                                     {kLeader, kReplica}, *sb.body);
    CHECK(ts.channels.size() == 3 * (k + 1));
  }
}

TEST_CASE("channel linearity: every channel appears in exactly one comm") {
  auto sp = protocols::SeqPaxos::make(2, 1, 2, 2);
  const ProtocolBody b2 = iter(sp.body, 2);
  std::map<ChannelId, int> uses;
  count_comms(*b2.body, uses);
  CHECK(uses.size() == 9);
  for (const auto& [_, n] : uses) CHECK(n == 1);
}

TEST_CASE("closed programs typecheck with an empty environment") {
  auto sv = protocols::SimpleVote::make(4, 1);
  const auto closed = sv.closed(true, {true, true, false});
  const Typing t = typecheck_prog({}, sv.roles, *closed);
  CHECK(t.result ==
        RecordType{{kLeader, ValueType::option(ValueType::bool_type())}});
}

TEST_CASE("program hash is stable across structurally equal builds") {
  auto a = protocols::SimpleVote::make(4, 1);
  auto b = protocols::SimpleVote::make(4, 1);
  CHECK(program_hash(*a.program) == program_hash(*b.program));
  auto c = protocols::SimpleVote::make(5, 1);
  CHECK(program_hash(*a.program) == program_hash(*c.program));  // same shape
  CHECK(program_hash(*a.closed(true, {true, true, false})) !=
        program_hash(*a.closed(true, {true, false, false})));
}
