#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "choreo/lll.hpp"
#include "choreo/protocols.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace choreo;
using namespace choreo::lll;
using hll::ChannelId;
using protocols::kLeader;
using protocols::kReplica;
using tu::F;
using tu::T;
using values::Closure;
using values::Value;
using values::ValueType;

namespace {

// Bounded trace-equivalence oracle: enumerate every label sequence where
// receive payloads are drawn from a small pool of bool lists, recording the
// labels taken and the final return value.
const std::vector<std::vector<Value>>& msg_pool() {
  static const std::vector<std::vector<Value>> pool = {
      {}, {T()}, {F()}, {T(), F()}, {F(), F()}};
  return pool;
}

void traces_rec(const NodeProgram& t, std::string prefix,
                std::set<std::string>& out) {
  switch (t.kind()) {
    case NodeProgram::Kind::Return:
      out.insert(prefix + "ret:" + t.return_value().str());
      return;
    case NodeProgram::Kind::Send:
      traces_rec(t.after_send(),
                 prefix + "snd(" + t.channel().str() + "," +
                     t.send_payload().str() + ");",
                 out);
      return;
    case NodeProgram::Kind::Recv:
      for (const auto& msgs : msg_pool()) {
        std::string lbl = "rcv(" + t.channel().str() + ",";
        for (const Value& v : msgs) lbl += v.str();
        traces_rec(t.apply_receive(msgs), prefix + lbl + ");", out);
      }
      return;
  }
}

std::set<std::string> traces(const NodeProgram& t) {
  std::set<std::string> out;
  traces_rec(t, "", out);
  return out;
}

// Random small tree generator for the monad-law suite; receive handlers pick
// a pre-generated continuation by the received list's length.
NodeProgram random_tree(std::mt19937_64& rng, int depth) {
  const ChannelId chans[] = {{"a"}, {"b"}, {"d"}};
  const uint64_t pick = rng() % (depth <= 0 ? 1 : 3);
  if (pick == 0) return NodeProgram::ret(Value::boolean(rng() % 2 == 0));
  if (pick == 1)
    return NodeProgram::send_then(chans[rng() % 3], Value::boolean(rng() % 2 == 0),
                                  random_tree(rng, depth - 1));
  std::vector<NodeProgram> ks;
  for (int i = 0; i < 3; ++i) ks.push_back(random_tree(rng, depth - 1));
  return NodeProgram::rcv_then(chans[rng() % 3],
                               [ks](std::span<const Value> msgs) {
                                 return ks[msgs.size() % ks.size()];
                               });
}

}  // namespace

TEST_CASE("bind replaces return leaves") {
  const auto f = [](const Value& v) {
    return NodeProgram::send_then(ChannelId{"out"}, v, NodeProgram::ret(Value::unit()));
  };
  // Left identity: bind(ret v, f) behaves as f(v).
  CHECK(traces(bind(NodeProgram::ret(tu::nat(3, 5)), f)) ==
        traces(f(tu::nat(3, 5))));
  // Send case: the send is preserved and the continuation is bound.
  const NodeProgram t =
      NodeProgram::send_then(ChannelId{"c"}, T(), NodeProgram::ret(Value::unit()));
  const NodeProgram bt = bind(t, f);
  CHECK(bt.kind() == NodeProgram::Kind::Send);
  CHECK(bt.channel() == ChannelId{"c"});
  CHECK(traces(bt.after_send()) == traces(f(Value::unit())));
}

TEST_CASE("bind satisfies right identity and associativity on random trees") {
  std::mt19937_64 rng(7);
  const auto ret_fn = [](const Value& v) { return NodeProgram::ret(v); };
  for (int i = 0; i < 50; ++i) {
    const NodeProgram t = random_tree(rng, 3);
    CHECK(traces(bind(t, ret_fn)) == traces(t));

    const auto f = [](const Value& v) {
      return NodeProgram::send_then(ChannelId{"f"}, v,
                                    NodeProgram::ret(Value::boolean(false)));
    };
    const auto g = [](const Value& v) {
      return NodeProgram::rcv_then(ChannelId{"g"},
                                   [v](std::span<const Value> msgs) {
                                     return NodeProgram::ret(
                                         Value::boolean(msgs.empty()));
                                   });
    };
    const NodeProgram lhs = bind(bind(t, f), g);
    const NodeProgram rhs =
        bind(t, [&](const Value& v) { return bind(f(v), g); });
    CHECK(traces(lhs) == traces(rhs));
  }
}

TEST_CASE("node_step follows the two transition rules") {
  const NodeProgram send =
      NodeProgram::send_then(ChannelId{"c"}, T(), NodeProgram::ret(Value::unit()));
  auto next = node_step(send, NodeLabel::send(ChannelId{"c"}, T()));
  REQUIRE(next.has_value());
  CHECK(next->kind() == NodeProgram::Kind::Return);
  CHECK(next->return_value() == Value::unit());

  CHECK_FALSE(node_step(send, NodeLabel::send(ChannelId{"x"}, T())).has_value());
  CHECK_FALSE(node_step(send, NodeLabel::send(ChannelId{"c"}, F())).has_value());
  CHECK_FALSE(node_step(send, NodeLabel::receive(ChannelId{"c"}, {})).has_value());

  const NodeProgram done = NodeProgram::ret(T());
  CHECK_FALSE(node_step(done, NodeLabel::send(ChannelId{"c"}, T())).has_value());
}

TEST_CASE("projected SimpleVote nodes") {
  auto sv = protocols::SimpleVote::make(4, 1);
  const auto closed = sv.closed(true, {true, true, false});

  SUBCASE("replica sends its input then returns unit") {
    for (uint32_t i = 0; i < 3; ++i) {
      const NodeProgram r = project(closed, kReplica, i).instantiate();
      REQUIRE(r.kind() == NodeProgram::Kind::Send);
      CHECK(r.channel() == ChannelId{"c"});
      CHECK(r.send_payload() == Value::boolean(i < 2));  // inputs T,T,F
      const NodeProgram after = r.after_send();
      CHECK(after.kind() == NodeProgram::Kind::Return);
      CHECK(after.return_value() == Value::unit());
    }
  }

  SUBCASE("leader receives and folds exactly like the values module") {
    const NodeProgram l = project(closed, kLeader, 0).instantiate();
    REQUIRE(l.kind() == NodeProgram::Kind::Recv);
    CHECK(l.channel() == ChannelId{"c"});
    auto fold_info = l.receive_fold();
    REQUIRE(fold_info.has_value());
    CHECK(fold_info->first == Closure(sv.registry.get("fcnteq"), {T()}));
    CHECK(fold_info->second == tu::nat(0, 4));

    // Handler output equals calc_dec(fold(fcnteq p, 0, msgs), p) pointwise.
    const Closure calc(sv.registry.get("calc_dec"));
    for (const auto& msgs : msg_pool()) {
      const NodeProgram after = l.apply_receive(msgs);
      REQUIRE(after.kind() == NodeProgram::Kind::Return);
      const Value folded = values::fold(fold_info->first, fold_info->second, msgs);
      const Value args[] = {folded, T()};
      CHECK(after.return_value() == values::apply(calc, args));
    }
  }
}

TEST_CASE("projected Bosco replica sends then receives on the same channel") {
  auto bos = protocols::Bosco::make(3, 1);
  const auto closed = bos.closed({true, false}, 0);
  const NodeProgram r = project(closed, kReplica, 0).instantiate();
  REQUIRE(r.kind() == NodeProgram::Kind::Send);
  const NodeProgram after = r.after_send();
  REQUIRE(after.kind() == NodeProgram::Kind::Recv);
  CHECK(after.channel() == r.channel());

  // Handler = mkdec composed over the counting fold, pointwise.
  auto fold_info = after.receive_fold();
  REQUIRE(fold_info.has_value());
  const Closure mkdec(bos.registry.get("mkdec"));
  for (const auto& msgs : msg_pool()) {
    const NodeProgram done = after.apply_receive(msgs);
    REQUIRE(done.kind() == NodeProgram::Kind::Return);
    const Value counts = values::fold(fold_info->first, fold_info->second, msgs);
    const Value args[] = {counts};
    CHECK(done.return_value() == values::apply(mkdec, args));
  }
}

TEST_CASE("projection selects the node's vector literal element") {
  auto bos = protocols::Bosco::make(3, 1);
  const auto closed = bos.closed({true, false}, 0);
  CHECK(project(closed, kReplica, 0).instantiate().send_payload() == T());
  CHECK(project(closed, kReplica, 1).instantiate().send_payload() == F());
}

TEST_CASE("roles without a ret field return unit") {
  auto sv = protocols::SimpleVote::make(4, 1);
  const auto closed = sv.closed(false, {false, false, false});
  NodeProgram r = project(closed, kReplica, 2).instantiate();
  r = *node_step(r, NodeLabel::send(ChannelId{"c"}, F()));
  CHECK(r.kind() == NodeProgram::Kind::Return);
  CHECK(r.return_value() == Value::unit());
}

TEST_CASE("machine node equality merges converging environments") {
  auto sv = protocols::SimpleVote::make(4, 1);
  const auto closed = sv.closed(true, {true, true, false});
  const NodeProgram l = project(closed, kLeader, 0).instantiate();
  // Receiving [T,F] and [F,T] folds to the same count: identical states.
  const NodeProgram a = l.apply_receive(std::vector<Value>{T(), F()});
  const NodeProgram b = l.apply_receive(std::vector<Value>{F(), T()});
  CHECK(a == b);
  std::string ka, kb;
  a.append_state_key(ka);
  b.append_state_key(kb);
  CHECK(ka == kb);
  const NodeProgram c = l.apply_receive(std::vector<Value>{T(), T()});
  CHECK_FALSE(a == c);
}

TEST_CASE("node labels serialize to the trace line format") {
  CHECK(node_label_to_json(NodeLabel::send(ChannelId{"c1"}, T())).dump() ==
        R"({"chan":"c1","kind":"send","v":{"t":"bool","v":true}})");
  CHECK(node_label_to_json(NodeLabel::receive(ChannelId{"c", 2}, {F()})).dump() ==
        R"({"chan":"c#2","kind":"receive","msgs":[{"t":"bool","v":false}]})");
}

TEST_CASE("all projected label sequences respect the channel order") {
  auto run_all = [](const hll::ProgramPtr& p, const hll::RoleSet& roles,
                    const denote::Config& cfg) {
    const hll::Typing typing = hll::typecheck_prog({}, roles, *p);
    for (const auto& role : roles) {
      for (uint32_t i = 0; i < cfg.good(role); ++i) {
        const NodeProgram start = project(p, role, i).instantiate();
        // Walk every bounded trace; check ~_R at each prefix and that no
        // channel is acted on twice except a send-then-receive pair.
        std::vector<NodeLabel> labels;
        std::function<void(const NodeProgram&)> walk =
            [&](const NodeProgram& t) {
              CHECK(respects_channel_order(labels, typing.channels, role));
              std::map<std::string, int> sends, recvs;
              for (const auto& l : labels) {
                if (l.kind == NodeLabel::Kind::Send)
                  sends[l.chan.str()]++;
                else
                  recvs[l.chan.str()]++;
              }
              for (const auto& [c, cnt] : sends) CHECK(cnt <= 1);
              for (const auto& [c, cnt] : recvs) CHECK(cnt <= 1);
              if (t.kind() == NodeProgram::Kind::Send) {
                labels.push_back(NodeLabel::send(t.channel(), t.send_payload()));
                walk(t.after_send());
                labels.pop_back();
              } else if (t.kind() == NodeProgram::Kind::Recv) {
                ValueType msg_type = ValueType::unit_type();
                bool found = false;
                for (const auto& e : typing.channels)
                  if (e.id == t.channel()) {
                    msg_type = e.msg_type;
                    found = true;
                  }
                REQUIRE(found);
                for (const auto& msgs : msg_pool()) {
                  bool ok = true;
                  for (const Value& v : msgs)
                    if (!(v.type() == msg_type)) ok = false;
                  if (!ok) continue;
                  labels.push_back(NodeLabel::receive(t.channel(), msgs));
                  walk(t.apply_receive(msgs));
                  labels.pop_back();
                }
              }
            };
        walk(start);
      }
    }
  };

  auto sv = protocols::SimpleVote::make(4, 1);
  run_all(sv.closed(true, {true, true, false}), sv.roles,
          protocols::SimpleVote::config(4, 1, 1));
  auto bos = protocols::Bosco::make(3, 1);
  run_all(bos.closed({true, false}, 1), {kReplica},
          protocols::Bosco::config(3, 1, 1));
}
