// Differential soak: random small choreographies, random configurations,
// and the three semantics compared output-for-output.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "choreo/global.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace choreo;
using hll::ChannelId;
using hll::Expr;
using hll::ExprPtr;
using hll::Program;
using hll::ProgramPtr;
using hll::Role;
using tu::F;
using tu::T;
using values::PureFn;
using values::PureFnPtr;
using values::Value;
using values::ValueType;

namespace {

const Role A{"A"}, B{"B"};

struct Gen {
  std::mt19937_64 rng;
  values::Registry reg;
  std::vector<PureFnPtr> folds;

  explicit Gen(uint64_t seed) : rng(seed) {
    const ValueType boolean = ValueType::bool_type();
    folds.push_back(reg.add(PureFn{
        "last", {boolean, boolean}, boolean,
        [](std::span<const Value> a) { return a[1]; }, false}));
    folds.push_back(reg.add(PureFn{
        "orf", {boolean, boolean}, boolean,
        [](std::span<const Value> a) {
          return Value::boolean(a[0].as_bool() || a[1].as_bool());
        },
        true}));
    folds.push_back(reg.add(PureFn{
        "xorf", {boolean, boolean}, boolean,
        [](std::span<const Value> a) {
          return Value::boolean(a[0].as_bool() != a[1].as_bool());
        },
        true}));
    folds.push_back(reg.add(PureFn{
        "keep", {boolean, boolean}, boolean,
        [](std::span<const Value> a) { return a[0]; }, true}));
  }

  bool coin() { return rng() % 2 == 0; }
  uint64_t pick(uint64_t n) { return rng() % n; }

  denote::Config config() {
    std::map<Role, denote::RoleConfig> roles;
    for (const Role& r : {A, B}) {
      denote::RoleConfig rc;
      rc.n = 1 + pick(3);
      rc.b = rc.n > 1 ? pick(2) : 0;
      rc.f = rc.b + pick(rc.n - rc.b + 1);
      if (rc.f > rc.n) rc.f = rc.n;
      roles[r] = rc;
    }
    return denote::Config(roles);
  }

  // A bool-typed expression situated at `role`, drawing on bound variables.
  ExprPtr expr_at(const Role& role, const std::map<Role, std::vector<std::string>>& vars,
                  uint32_t good) {
    const auto& avail = vars.count(role) ? vars.at(role) : std::vector<std::string>{};
    const uint64_t c = pick(avail.empty() ? 2 : 3);
    if (c == 0) return Expr::lift(Value::boolean(coin()), role);
    if (c == 1) {
      std::vector<Value> items;
      for (uint32_t i = 0; i < good; ++i) items.push_back(Value::boolean(coin()));
      return Expr::vec(std::move(items), role);
    }
    return Expr::var(avail[pick(avail.size())], role);
  }

  ProgramPtr program(const denote::Config& cfg) {
    const uint32_t comms = 2 + pick(2);
    std::map<Role, std::vector<std::string>> vars;
    std::vector<std::tuple<std::string, ProgramPtr>> lets;
    for (uint32_t i = 0; i < comms; ++i) {
      const Role sender = coin() ? A : B;
      const Role receiver = coin() ? A : B;
      const std::string var = "v" + std::to_string(i);
      ProgramPtr comm = Program::comm(
          ChannelId{"c" + std::to_string(i)},
          expr_at(sender, vars, cfg.good(sender)),
          expr_at(receiver, vars, cfg.good(receiver)),
          Expr::lift(folds[pick(folds.size())], receiver));
      lets.emplace_back(var, std::move(comm));
      vars[receiver].push_back(var);
    }
    std::map<Role, ExprPtr> record;
    record.emplace(A, expr_at(A, vars, cfg.good(A)));
    if (coin()) record.emplace(B, expr_at(B, vars, cfg.good(B)));
    ProgramPtr p = Program::ret(std::move(record));
    for (auto it = lets.rbegin(); it != lets.rend(); ++it)
      p = Program::let(std::get<0>(*it), std::get<1>(*it), p);
    return p;
  }
};

}  // namespace

TEST_CASE("declared fold invariance holds for the soak registry") {
  Gen gen(0);
  for (const auto& fn : gen.folds) {
    std::string witness;
    const bool invariant =
        values::check_fold_order_invariance(values::Closure(fn), 4, &witness);
    CHECK(invariant == fn->commutative_fold);
  }
}

TEST_CASE("random programs satisfy the semantic sandwich") {
  size_t checked = 0;
  for (uint64_t seed = 1; seed <= 30; ++seed) {
    Gen gen(seed);
    const denote::Config cfg = gen.config();
    const ProgramPtr p = gen.program(cfg);
    CAPTURE(seed);
    CAPTURE(hll::program_to_json(*p).dump());

    const hll::Typing typing = hll::typecheck_prog({}, {A, B}, *p);
    (void)typing;

    const denote::OutputSet den = denote::denote_prog(cfg, {}, p);
    // Normalization preserves the denotation.
    const ProgramPtr norm = hll::normalize(p);
    CHECK(denote::denote_prog(cfg, {}, norm) == den);
    // The literal list pipeline agrees with the fold-outcome enumeration.
    denote::Options literal;
    literal.materialize_lists = true;
    CHECK(denote::denote_prog(cfg, {}, p, literal) == den);

    const denote::OutputSet big = global::bigstep_run(norm, cfg);
    for (const auto& r : big) CHECK(den.count(r) == 1);

    global::Budget budget;
    budget.max_states = 400'000;
    const global::System sys(p, cfg);
    const global::ExploreResult res = sys.explore(budget);
    for (const auto& r : res.outputs) CHECK(big.count(r) == 1);
    if (res.exhaustive) {
      CHECK(res.outputs == den);
      checked++;
    }

    // A few simulated schedules replay, align and restitch consistently.
    for (uint64_t s = 0; s < 3; ++s) {
      const auto trace = sys.simulate(s);
      const auto direct = sys.replay(trace);
      REQUIRE(direct.ok);
      const auto aligned = global::align(sys.delta(), trace);
      const auto re = sys.replay(aligned);
      REQUIRE(re.ok);
      CHECK(*re.final_state == *direct.final_state);
      const auto stitched = global::restitch_random(trace, s + 99);
      const auto rs = sys.replay(stitched);
      REQUIRE(rs.ok);
      CHECK(*rs.final_state == *direct.final_state);
    }
  }
  // The state budget is generous enough that the sweep stays exhaustive.
  CHECK(checked >= 25);
}
