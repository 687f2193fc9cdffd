#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>

#include "choreo/denote.hpp"
#include "choreo/protocols.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace choreo;
using namespace choreo::denote;
using protocols::kLeader;
using protocols::kReplica;
using tu::F;
using tu::T;
using values::Closure;
using values::Value;
using values::ValueType;

namespace {

std::set<std::vector<Value>> as_set(const std::vector<std::vector<Value>>& vs) {
  return {vs.begin(), vs.end()};
}

}  // namespace

TEST_CASE("add_any appends exactly b arbitrary values") {
  const std::vector<Value> v = {T(), F()};
  CHECK(as_set(add_any(v, 0, ValueType::bool_type())) ==
        std::set<std::vector<Value>>{{T(), F()}});
  const std::vector<Value> one = {T()};
  CHECK(as_set(add_any(one, 1, ValueType::bool_type())) ==
        std::set<std::vector<Value>>{{T(), T()}, {T(), F()}});
  CHECK(add_any(v, 2, ValueType::bool_type()).size() == 4);
}

TEST_CASE("perm produces all distinct permutations") {
  CHECK(perm(std::vector<Value>{}) == std::set<std::vector<Value>>{{}});
  const std::vector<Value> tf = {T(), F()};
  CHECK(perm(tf) == std::set<std::vector<Value>>{{T(), F()}, {F(), T()}});
  const std::vector<Value> three = {tu::nat(1, 3), tu::nat(2, 3), tu::nat(3, 3)};
  CHECK(perm(three).size() == 6);
  // Duplicates collapse.
  const std::vector<Value> dup = {T(), T(), F()};
  CHECK(perm(dup).size() == 3);
}

TEST_CASE("trunc yields suffix-shortened prefixes down to lo") {
  const std::vector<Value> abc = {tu::nat(0, 2), tu::nat(1, 2), tu::nat(2, 2)};
  CHECK(as_set(trunc(abc, 3)) == std::set<std::vector<Value>>{abc});
  CHECK(trunc(abc, 2).size() == 2);
  CHECK(trunc(abc, 0).size() == 4);
  CHECK(trunc(abc, 1).size() == abc.size() - 1 + 1);
  CHECK_THROWS_AS(trunc(abc, 4), ConfigError);
}

TEST_CASE("netwk equals the permutation closure of the nine reference lists") {
  const Config cfg = protocols::SimpleVote::config(4, 1, 1);
  const std::vector<Value> msgs = tu::bools({true, true, false});
  const auto got = netwk(cfg, kReplica, msgs, ValueType::bool_type());

  // The nine reference base lists, closed under permutation.
  const std::vector<std::vector<Value>> base = {
      tu::bools({true, true, true}),         tu::bools({true, false, true}),
      tu::bools({true, false, true}),        tu::bools({true, true, false}),
      tu::bools({true, false, false}),       tu::bools({true, false, false}),
      tu::bools({true, true, false, true}),  tu::bools({true, true, false, false}),
      tu::bools({true, true, false})};
  std::set<std::vector<Value>> closure;
  for (const auto& l : base)
    for (const auto& p : perm(l)) closure.insert(p);
  CHECK(got == closure);
  CHECK(got.size() == 17);
}

TEST_CASE("fault-free netwk is exactly the permutations") {
  const Config cfg({{kReplica, {3, 0, 0}}});
  const std::vector<Value> msgs = tu::bools({true, false, false});
  CHECK(netwk(cfg, kReplica, msgs, ValueType::bool_type()) == perm(msgs));
}

TEST_CASE("netwk list lengths stay within n-f and n") {
  const Config cfg({{kReplica, {4, 1, 1}}});
  const std::vector<Value> msgs = tu::bools({true, false, true});
  for (const auto& l : netwk(cfg, kReplica, msgs, ValueType::bool_type())) {
    CHECK(l.size() >= 3);
    CHECK(l.size() <= 4);
  }
}

TEST_CASE("netwk contains the undisturbed delivery") {
  const Config cfg({{kReplica, {3, 1, 1}}});
  const std::vector<Value> msgs = tu::bools({true, false});
  const auto got = netwk(cfg, kReplica, msgs, ValueType::bool_type());
  for (bool byz : {false, true}) {
    std::vector<Value> full = msgs;
    full.push_back(Value::boolean(byz));
    CHECK(got.count(full) == 1);
  }
}

TEST_CASE("netwk grows monotonically with the byzantine budget") {
  // Same good messages and same delivery floor (lo = 3); only b grows.
  const std::vector<Value> msgs = tu::bools({true, false, true});
  const Config b0({{kReplica, {3, 0, 0}}});  // g = 3, lo = 3, b = 0
  const Config b1({{kReplica, {4, 1, 1}}});  // g = 3, lo = 3, b = 1
  const auto small = netwk(b0, kReplica, msgs, ValueType::bool_type());
  const auto large = netwk(b1, kReplica, msgs, ValueType::bool_type());
  for (const auto& l : small) CHECK(large.count(l) == 1);
  CHECK(large.size() > small.size());
}

TEST_CASE("denote_expr looks up, replicates and applies pointwise") {
  const Config cfg({{kLeader, {1, 0, 0}}, {kReplica, {4, 1, 1}}});
  const Env env{{"p", {{kLeader, {T()}}}},
                {"x", {{kReplica, tu::bools({true, false, true})}}}};
  auto sv = protocols::SimpleVote::make(4, 1);

  const auto vp = denote_expr(cfg, env, kLeader, *hll::Expr::var("p", kLeader));
  REQUIRE(vp.size() == 1);
  CHECK(values::ground(vp[0]) == T());

  const auto lifted =
      denote_expr(cfg, env, kReplica, *hll::Expr::lift(tu::nat(0, 4), kReplica));
  REQUIRE(lifted.size() == 3);
  for (const auto& v : lifted) CHECK(values::ground(v) == tu::nat(0, 4));

  // Pointwise partial application, validated by probing each closure.
  const auto partial = denote_expr(
      cfg, env, kReplica,
      *hll::Expr::app(hll::Expr::lift(sv.registry.get("fcnteq"), kReplica),
                      hll::Expr::var("x", kReplica)));
  REQUIRE(partial.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    const auto& cl = std::get<Closure>(partial[i]);
    const Value probe[] = {tu::nat(0, 4), T()};
    const uint32_t expect = env.at("x").at(kReplica)[i].as_bool() ? 1 : 0;
    CHECK(values::apply(cl, probe) == tu::nat(expect, 4));
  }
}

TEST_CASE("vector literals must match the good node count") {
  const Config cfg({{kReplica, {4, 1, 1}}});
  const Env env;
  CHECK_THROWS_AS(
      denote_expr(cfg, env, kReplica,
                  *hll::Expr::vec(tu::bools({true, false}), kReplica)),
      Error);
}

TEST_CASE("SimpleVote denotes to its golden output set") {
  auto sv = protocols::SimpleVote::make(4, 1);
  const Config cfg = protocols::SimpleVote::config(4, 1, 1);
  const Env env{{"p", {{kLeader, {T()}}}},
                {"x", {{kReplica, tu::bools({true, true, false})}}}};
  const OutputSet out = denote_prog(cfg, env, sv.program);
  const OutputSet want = {
      DistRecord{{kLeader, {Value::some(T())}}},
      DistRecord{{kLeader, {Value::none(ValueType::bool_type())}}}};
  CHECK(out == want);
}

TEST_CASE("ret-only programs denote to a singleton") {
  const Config cfg({{kLeader, {1, 0, 0}}});
  const auto p =
      hll::Program::ret({{kLeader, hll::Expr::lift(tu::nat(1, 3), kLeader)}});
  const OutputSet out = denote_prog(cfg, {}, p);
  CHECK(out == OutputSet{DistRecord{{kLeader, {tu::nat(1, 3)}}}});
}

TEST_CASE("bosco single-iteration outputs from agreeing inputs") {
  auto bos = protocols::Bosco::make(4, 1);
  const Config cfg = protocols::Bosco::config(4, 1, 1);
  const Env env{{"v", {{kReplica, tu::bools({true, true, true})}}}};
  const OutputSet out = denote_prog(cfg, env, bos.body.body);
  const Value decided = Value::pair(Value::some(T()), T());
  const Value undecided = Value::pair(Value::none(ValueType::bool_type()), T());
  for (const auto& rec : out)
    for (const Value& v : rec.at(kReplica)) CHECK((v == decided || v == undecided));

  // n = 8, no byzantine nodes: the one-step theorem forces a decision.
  auto bos8 = protocols::Bosco::make(8, 1);
  const Config cfg8 = protocols::Bosco::config(8, 1, 0);
  const Env env8{{"v", {{kReplica, std::vector<Value>(8, T())}}}};
  const OutputSet out8 = denote_prog(cfg8, env8, bos8.body.body);
  for (const auto& rec : out8)
    for (const Value& v : rec.at(kReplica))
      CHECK(v == Value::pair(Value::some(T()), T()));
}

TEST_CASE("count_occurrences") {
  const std::vector<Value> l = tu::bools({true, false, true});
  CHECK(count_occurrences(T(), l) == 2);
  CHECK(count_occurrences(F(), std::vector<Value>{}) == 0);
}

TEST_CASE("counting bounds hold across every netwk list") {
  const Config cfg({{kReplica, {4, 1, 1}}});
  std::vector<Value> l;
  std::function<void()> rec = [&]() {
    if (l.size() == 3) {
      for (const auto& lp : netwk(cfg, kReplica, l, ValueType::bool_type())) {
        for (const Value v : {T(), F()}) {
          const int64_t base = count_occurrences(v, l);
          const int64_t got = count_occurrences(v, lp);
          CHECK(got >= base - 1);
          CHECK(got <= base + 1);
        }
      }
      return;
    }
    for (bool b : {false, true}) {
      l.push_back(Value::boolean(b));
      rec();
      l.pop_back();
    }
  };
  rec();
}

TEST_CASE("fold outcome enumeration matches the materialized oracle") {
  auto sv = protocols::SimpleVote::make(4, 1);
  auto sp = protocols::SeqPaxos::make(2, 1, 2, 1);
  const Options literal{.materialize_lists = true};

  SUBCASE("commutative fold over bools, lists up to length 5") {
    const Closure f(sv.registry.get("fcnteq"), {T()});
    const Value d = tu::nat(0, 4);
    std::vector<Value> msgs;
    std::function<void()> rec = [&]() {
      for (uint32_t byz : {0u, 1u}) {
        const uint32_t hi = msgs.size() + byz;
        for (uint32_t lo = 0; lo <= hi; ++lo) {
          CHECK(fold_outcomes(f, d, msgs, byz, lo, ValueType::bool_type()) ==
                fold_outcomes(f, d, msgs, byz, lo, ValueType::bool_type(), literal));
        }
      }
      if (msgs.size() == 4) return;
      for (bool b : {false, true}) {
        msgs.push_back(Value::boolean(b));
        rec();
        msgs.pop_back();
      }
    };
    rec();
  }

  SUBCASE("order-sensitive folds over paxos states") {
    const Closure fmaxr(sp.registry.get("fmaxr"));
    const Closure update(sp.registry.get("update"));
    const Value init = sp.state_value(std::nullopt, 0);
    const std::vector<Value> pool = {
        sp.state_value(std::nullopt, 0), sp.state_value(0, 1),
        sp.state_value(1, 1), sp.state_value(1, 2)};
    for (size_t i = 0; i < pool.size(); ++i)
      for (size_t j = 0; j < pool.size(); ++j)
        for (size_t k = 0; k < pool.size(); ++k) {
          const std::vector<Value> msgs = {pool[i], pool[j], pool[k]};
          for (uint32_t lo = 0; lo <= 3; ++lo) {
            CHECK(fold_outcomes(fmaxr, init, msgs, 0, lo, sp.state_type) ==
                  fold_outcomes(fmaxr, init, msgs, 0, lo, sp.state_type, literal));
          }
        }
    // update folds a (value, round) message stream into the replica state.
    const ValueType msg2 = ValueType::pair(sp.vtype, sp.round_type);
    const std::vector<Value> m = {
        Value::pair(tu::nat(0, 1), tu::nat(1, sp.round_max)),
        Value::pair(tu::nat(1, 1), tu::nat(2, sp.round_max))};
    for (uint32_t lo = 0; lo <= 2; ++lo)
      CHECK(fold_outcomes(update, init, m, 0, lo, msg2) ==
            fold_outcomes(update, init, m, 0, lo, msg2, literal));

    // Byzantine additions dedup to multisets even for order-sensitive folds.
    const std::vector<Value> two = {sp.state_value(0, 1), sp.state_value(1, 2)};
    for (uint32_t lo = 0; lo <= 3; ++lo)
      CHECK(fold_outcomes(fmaxr, init, two, 1, lo, sp.state_type) ==
            fold_outcomes(fmaxr, init, two, 1, lo, sp.state_type, literal));
  }
}

TEST_CASE("let binds every intermediate record") {
  // let a = comm in ret {L -> a} is the comm itself.
  auto sv = protocols::SimpleVote::make(4, 1);
  const Config cfg = protocols::SimpleVote::config(4, 1, 1);
  const Env env{{"p", {{kLeader, {T()}}}},
                {"x", {{kReplica, tu::bools({true, true, false})}}}};
  const auto comm = hll::Program::comm(
      hll::ChannelId{"c"}, hll::Expr::var("x", kReplica),
      hll::Expr::lift(tu::nat(0, 4), kLeader),
      hll::Expr::app(hll::Expr::lift(sv.registry.get("fcnteq"), kLeader),
                     hll::Expr::var("p", kLeader)));
  const auto let = hll::Program::let(
      "a", comm, hll::Program::ret({{kLeader, hll::Expr::var("a", kLeader)}}));
  const OutputSet direct = denote_prog(cfg, env, comm);
  const OutputSet bound = denote_prog(cfg, env, let);
  CHECK(direct == bound);
  // Counts 1..3 are reachable for the leader.
  const OutputSet want = {DistRecord{{kLeader, {tu::nat(1, 4)}}},
                          DistRecord{{kLeader, {tu::nat(2, 4)}}},
                          DistRecord{{kLeader, {tu::nat(3, 4)}}}};
  CHECK(direct == want);
}
