#include "choreo/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <sstream>

namespace choreo::protocols {

using hll::Expr;
using hll::ExprPtr;
using hll::Program;
using hll::ProgramPtr;
using hll::Role;
using values::Closure;
using values::PureFn;
using values::PureFnPtr;

namespace {

Value nat_sat_inc(const Value& v) {
  const uint32_t max = v.type().nat_max();
  return Value::nat(std::min(v.as_nat() + 1, max), max);
}

std::vector<std::vector<Value>> bool_vectors(uint32_t len) {
  std::vector<std::vector<Value>> out;
  std::vector<Value> cur;
  std::function<void()> rec = [&]() {
    if (cur.size() == len) {
      out.push_back(cur);
      return;
    }
    for (bool b : {false, true}) {
      cur.push_back(Value::boolean(b));
      rec();
      cur.pop_back();
    }
  };
  rec();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// SimpleVote
// ---------------------------------------------------------------------------

SimpleVote SimpleVote::make(uint32_t n, uint32_t f) {
  SimpleVote sv;
  sv.n = n;
  sv.f = f;
  const ValueType boolean = ValueType::bool_type();
  const ValueType cnt_t = ValueType::nat_type(n);

  PureFnPtr fcnteq = sv.registry.add(PureFn{
      "fcnteq",
      {boolean, cnt_t, boolean},
      cnt_t,
      [](std::span<const Value> a) {
        return a[0].as_bool() == a[2].as_bool() ? nat_sat_inc(a[1]) : a[1];
      },
      /*commutative_fold=*/true});
  PureFnPtr calc_dec = sv.registry.add(PureFn{
      "calc_dec",
      {cnt_t, boolean},
      ValueType::option(boolean),
      [n, f, boolean](std::span<const Value> a) {
        if (static_cast<int64_t>(a[0].as_nat()) >=
            static_cast<int64_t>(n) - 2 * static_cast<int64_t>(f))
          return Value::some(a[1]);
        return Value::none(boolean);
      }});

  sv.program = Program::let(
      "cnt",
      Program::comm(hll::ChannelId{"c"}, Expr::var("x", kReplica),
                    Expr::lift(Value::nat(0, n), kLeader),
                    Expr::app(Expr::lift(fcnteq, kLeader), Expr::var("p", kLeader))),
      Program::ret({{kLeader, Expr::apps(Expr::lift(calc_dec, kLeader),
                                         {Expr::var("cnt", kLeader),
                                          Expr::var("p", kLeader)})}}));
  sv.gamma = hll::TypeEnv{{"p", {{kLeader, boolean}}}, {"x", {{kReplica, boolean}}}};
  return sv;
}

Config SimpleVote::config(uint32_t n, uint32_t f, uint32_t b) {
  return Config({{kLeader, {1, 0, 0}}, {kReplica, {n, f, b}}});
}

ProgramPtr SimpleVote::closed(bool leader_input,
                              const std::vector<bool>& replica_inputs) const {
  std::vector<Value> xs;
  for (bool b : replica_inputs) xs.push_back(Value::boolean(b));
  return hll::close_program(
      program, {{"p", {{kLeader, {Value::boolean(leader_input)}}}},
                {"x", {{kReplica, xs}}}});
}

// ---------------------------------------------------------------------------
// Bosco
// ---------------------------------------------------------------------------

Bosco Bosco::make(uint32_t n, uint32_t f, bool asymmetric) {
  Bosco bos;
  bos.n = n;
  bos.f = f;
  bos.asymmetric = asymmetric;
  const ValueType boolean = ValueType::bool_type();
  const ValueType cnt_t = ValueType::nat_type(n);
  bos.count_pair_type = ValueType::pair(cnt_t, cnt_t);
  bos.decision_type = ValueType::pair(ValueType::option(boolean), boolean);

  PureFnPtr fcntb = bos.registry.add(PureFn{
      "fcntb",
      {bos.count_pair_type, boolean},
      bos.count_pair_type,
      [](std::span<const Value> a) {
        return a[1].as_bool() ? Value::pair(nat_sat_inc(a[0].first()), a[0].second())
                              : Value::pair(a[0].first(), nat_sat_inc(a[0].second()));
      },
      /*commutative_fold=*/true});
  PureFnPtr mkdec = bos.registry.add(PureFn{
      "mkdec",
      {bos.count_pair_type},
      bos.decision_type,
      [n, f, asymmetric, boolean](std::span<const Value> a) {
        const uint32_t cnt_t_ = a[0].first().as_nat();
        const uint32_t cnt_f_ = a[0].second().as_nat();
        const bool newv = cnt_t_ >= cnt_f_;
        const uint64_t cnt = newv ? cnt_t_ : cnt_f_;
        const uint64_t threshold = uint64_t(n) + 3 * uint64_t(f);
        const bool decide =
            (asymmetric && newv) ? 2 * cnt >= threshold : 2 * cnt > threshold;
        const Value nv = Value::boolean(newv);
        return Value::pair(decide ? Value::some(nv) : Value::none(boolean), nv);
      }});
  PureFnPtr snd_dec = bos.registry.add(
      PureFn{"snd", {bos.decision_type}, boolean, [](std::span<const Value> a) {
               return a[0].second();
             }});

  const Value zero2 = Value::pair(Value::nat(0, n), Value::nat(0, n));
  bos.body.channel_bases = {"c"};
  bos.body.input_var = "v";
  bos.body.input_type = {{kReplica, boolean}};
  bos.body.body = Program::let(
      "cnts",
      Program::comm(hll::ChannelId{"c"}, Expr::var("v", kReplica),
                    Expr::lift(zero2, kReplica), Expr::lift(fcntb, kReplica)),
      Program::ret(
          {{kReplica, Expr::app(Expr::lift(mkdec, kReplica),
                                Expr::var("cnts", kReplica))}}));
  bos.body.thread = {{kReplica, snd_dec}};
  return bos;
}

Config Bosco::config(uint32_t n, uint32_t f, uint32_t b) {
  return Config({{kReplica, {n, f, b}}});
}

ProgramPtr Bosco::closed(const std::vector<bool>& inputs, uint32_t iterations) const {
  std::vector<Value> xs;
  for (bool b : inputs) xs.push_back(Value::boolean(b));
  return hll::close_with_inputs(hll::iter(body, iterations), {{kReplica, xs}});
}

// ---------------------------------------------------------------------------
// SeqPaxos
// ---------------------------------------------------------------------------

SeqPaxos SeqPaxos::make(uint32_t n, uint32_t f, uint32_t vsize,
                        uint32_t max_iterations,
                        std::vector<uint32_t> default_table) {
  SeqPaxos sp;
  sp.n = n;
  sp.f = f;
  sp.vsize = vsize;
  sp.round_max = max_iterations + 2;
  sp.vtype = ValueType::nat_type(vsize - 1);
  sp.round_type = ValueType::nat_type(sp.round_max);
  sp.state_type = ValueType::pair(ValueType::option(sp.vtype), sp.round_type);
  const ValueType cnt_t = ValueType::nat_type(n);
  const ValueType msg2_t = ValueType::pair(sp.vtype, sp.round_type);
  const ValueType opt_v = ValueType::option(sp.vtype);

  if (default_table.empty())
    for (uint32_t r = 0; r <= sp.round_max; ++r) default_table.push_back(r % vsize);
  if (default_table.size() < sp.round_max + 1)
    throw Error("default table shorter than the round bound");
  for (uint32_t v : default_table)
    if (v >= vsize) throw Error("default table entry outside the value domain");
  sp.default_table = default_table;

  PureFnPtr fmaxr = sp.registry.add(PureFn{
      "fmaxr",
      {sp.state_type, sp.state_type},
      sp.state_type,
      [](std::span<const Value> a) {
        return a[0].second().as_nat() < a[1].second().as_nat() ? a[1] : a[0];
      }});
  PureFnPtr pickp = sp.registry.add(PureFn{
      "pickp",
      {sp.state_type, sp.vtype},
      sp.vtype,
      [](std::span<const Value> a) {
        return a[0].first().is_some() ? a[0].first().some_inner() : a[1];
      }});
  PureFnPtr default_fn = sp.registry.add(PureFn{
      "default",
      {sp.round_type},
      sp.vtype,
      [table = sp.default_table, vsize](std::span<const Value> a) {
        return Value::nat(table[a[0].as_nat()], vsize - 1);
      }});
  PureFnPtr pair_vr = sp.registry.add(PureFn{
      "pair_vr",
      {sp.vtype, sp.round_type},
      msg2_t,
      [](std::span<const Value> a) { return Value::pair(a[0], a[1]); }});
  PureFnPtr update = sp.registry.add(PureFn{
      "update",
      {sp.state_type, msg2_t},
      sp.state_type,
      [](std::span<const Value> a) {
        return Value::pair(Value::some(a[1].first()), a[1].second());
      }});
  PureFnPtr fcntr = sp.registry.add(PureFn{
      "fcntr",
      {sp.round_type, cnt_t, sp.state_type},
      cnt_t,
      [](std::span<const Value> a) {
        return a[0].as_nat() == a[2].second().as_nat() ? nat_sat_inc(a[1]) : a[1];
      },
      /*commutative_fold=*/true});
  PureFnPtr mkdec = sp.registry.add(PureFn{
      "mkdec",
      {cnt_t, sp.vtype},
      opt_v,
      [f, opt_v](std::span<const Value> a) {
        return a[0].as_nat() > f ? Value::some(a[1])
                                 : Value::none(opt_v.option_inner());
      }});
  PureFnPtr add = sp.registry.add(PureFn{
      "add",
      {sp.round_type, sp.round_type},
      sp.round_type,
      [](std::span<const Value> a) {
        const uint32_t max = a[0].type().nat_max();
        return Value::nat(std::min(a[0].as_nat() + a[1].as_nat(), max), max);
      }});
  PureFnPtr pair_dec = sp.registry.add(PureFn{
      "pair",
      {opt_v, sp.round_type},
      sp.state_type,
      [](std::span<const Value> a) { return Value::pair(a[0], a[1]); }});
  PureFnPtr snd = sp.registry.add(PureFn{
      "snd", {sp.state_type}, sp.round_type, [](std::span<const Value> a) {
        return a[0].second();
      }});

  const Value init_acc = Value::pair(Value::none(sp.vtype), Value::nat(0, sp.round_max));
  sp.body.channel_bases = {"c1", "c2", "c3"};
  sp.body.input_var = "x";
  sp.body.input_type = {{kLeader, sp.round_type}, {kReplica, sp.state_type}};
  sp.body.body = Program::let(
      "maxv",
      Program::comm(hll::ChannelId{"c1"}, Expr::var("x", kReplica),
                    Expr::lift(init_acc, kLeader), Expr::lift(fmaxr, kLeader)),
      Program::let(
          "p",
          Program::ret({{kLeader,
                         Expr::apps(Expr::lift(pickp, kLeader),
                                    {Expr::var("maxv", kLeader),
                                     Expr::app(Expr::lift(default_fn, kLeader),
                                               Expr::var("x", kLeader))})}}),
          Program::let(
              "y",
              Program::comm(hll::ChannelId{"c2"},
                            Expr::apps(Expr::lift(pair_vr, kLeader),
                                       {Expr::var("p", kLeader),
                                        Expr::var("x", kLeader)}),
                            Expr::var("x", kReplica), Expr::lift(update, kReplica)),
              Program::let(
                  "cnt",
                  Program::comm(hll::ChannelId{"c3"}, Expr::var("y", kReplica),
                                Expr::lift(Value::nat(0, n), kLeader),
                                Expr::app(Expr::lift(fcntr, kLeader),
                                          Expr::var("x", kLeader))),
                  Program::ret(
                      {{kLeader,
                        Expr::apps(
                            Expr::lift(pair_dec, kLeader),
                            {Expr::apps(Expr::lift(mkdec, kLeader),
                                        {Expr::var("cnt", kLeader),
                                         Expr::var("p", kLeader)}),
                             Expr::apps(Expr::lift(add, kLeader),
                                        {Expr::var("x", kLeader),
                                         Expr::lift(Value::nat(1, sp.round_max),
                                                    kLeader)})})},
                       {kReplica, Expr::var("y", kReplica)}})))));
  sp.body.thread = {{kLeader, snd}};

  sp.init = denote::DistRecord{
      {kLeader, {Value::nat(1, sp.round_max)}},
      {kReplica, std::vector<Value>(n, init_acc)}};
  return sp;
}

Config SeqPaxos::config(uint32_t n, uint32_t f) {
  // The single leader may crash: f_L = 1 with one good leader node.
  return Config({{kLeader, {1, 1, 0}}, {kReplica, {n, f, 0}}});
}

Value SeqPaxos::state_value(std::optional<uint32_t> v, uint32_t round) const {
  Value opt = v ? Value::some(Value::nat(*v, vsize - 1)) : Value::none(vtype);
  return Value::pair(opt, Value::nat(round, round_max));
}

ProgramPtr SeqPaxos::closed(uint32_t iterations) const {
  return hll::close_with_inputs(
      hll::iter(body, iterations),
      {{kLeader, init.at(kLeader)}, {kReplica, init.at(kReplica)}});
}

ProgramPtr SeqPaxos::closed_from(uint32_t leader_round,
                                 const std::vector<Value>& replica_states,
                                 uint32_t iterations) const {
  return hll::close_with_inputs(
      hll::iter(body, iterations),
      {{kLeader, {Value::nat(leader_round, round_max)}}, {kReplica, replica_states}});
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

nlohmann::json CheckReport::to_json() const {
  return {{"check", name},
          {"holds", holds},
          {"exhaustive", exhaustive},
          {"precondition_met", precondition_met},
          {"cases", cases},
          {"details", details}};
}

bool uc_bosco(std::span<const Value> inputs, bool b_value, uint32_t n, uint32_t f,
              bool asymmetric) {
  uint32_t cnt = 0;
  for (const Value& v : inputs)
    if (v.as_bool() == b_value) ++cnt;
  const uint64_t lhs = 2 * uint64_t(cnt);
  const uint64_t rhs = uint64_t(n) + f;
  if (asymmetric && b_value) return lhs >= rhs;
  return lhs > rhs;
}

bool uc_seqpaxos(const Config& cfg, const SeqPaxos& sp,
                 std::span<const Value> replica_states, uint32_t decided) {
  const Closure fmaxr(sp.registry.get("fmaxr"));
  const Value init = sp.state_value(std::nullopt, 0);
  for (const auto& l : denote::netwk(cfg, kReplica, replica_states, sp.state_type)) {
    const Value folded = values::fold(fmaxr, init, l);
    if (!folded.first().is_some()) return false;
    if (folded.first().some_inner().as_nat() != decided) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// check_one_step
// ---------------------------------------------------------------------------

CheckReport check_one_step(uint32_t n, uint32_t f, uint32_t b) {
  CheckReport rep;
  rep.name = "one-step";
  rep.precondition_met = n > 7 * f;
  const Bosco bos = Bosco::make(n, f);
  const Config cfg = Bosco::config(n, f, b);
  const uint32_t g = n - b;
  rep.holds = true;
  for (bool B : {false, true}) {
    denote::Env env{{"v", {{kReplica, std::vector<Value>(g, Value::boolean(B))}}}};
    const denote::OutputSet out = denote::denote_prog(cfg, env, bos.body.body);
    const Value expect = Value::pair(Value::some(Value::boolean(B)), Value::boolean(B));
    for (const auto& rec : out) {
      rep.cases++;
      for (const Value& v : rec.at(kReplica)) {
        if (!(v == expect)) {
          rep.holds = false;
          if (!rep.details.contains("witness"))
            rep.details["witness"] = {{"input", B}, {"output", v.str()}};
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// check_agreement_bosco
// ---------------------------------------------------------------------------

namespace {

struct BoscoInputResult {
  bool ok = true;
  uint64_t cases = 0;
  std::set<bool> decided;
  std::set<std::vector<Value>> next_inputs;  // z vectors
  std::string violation;
};

BoscoInputResult scan_bosco_input(const Bosco& bos, const Config& cfg,
                                  const std::vector<Value>& x, uint32_t n,
                                  uint32_t f, bool asymmetric) {
  BoscoInputResult r;
  denote::Env env{{"v", {{kReplica, x}}}};
  const denote::OutputSet out = denote::denote_prog(cfg, env, bos.body.body);
  for (const auto& rec : out) {
    r.cases++;
    std::vector<Value> z;
    for (const Value& v : rec.at(kReplica)) {
      if (v.first().is_some()) r.decided.insert(v.first().some_inner().as_bool());
      z.push_back(v.second());
    }
    r.next_inputs.insert(std::move(z));
  }
  // Obligation (1): a decision implies UC_B of the input.
  for (bool B : r.decided) {
    if (!uc_bosco(x, B, n, f, asymmetric)) {
      r.ok = false;
      r.violation = "decision without univalent condition";
      return r;
    }
  }
  // Agreement corollary: no input can decide both values.
  if (r.decided.size() > 1) {
    r.ok = false;
    r.violation = "two values decided from one input";
    return r;
  }
  // Obligation (2), base: UC_B implies Comply_B and UC_B of next inputs.
  for (bool B : {false, true}) {
    if (!uc_bosco(x, B, n, f, asymmetric)) continue;
    for (const auto& rec : out) {
      for (const Value& v : rec.at(kReplica)) {
        const Value& dec = v.first();
        if (dec.is_some() && dec.some_inner().as_bool() != B) {
          r.ok = false;
          r.violation = "Comply violated under UC";
          return r;
        }
      }
    }
    for (const auto& z : r.next_inputs) {
      if (!uc_bosco(z, B, n, f, asymmetric)) {
        r.ok = false;
        r.violation = "UC not preserved";
        return r;
      }
    }
  }
  return r;
}

}  // namespace

CheckReport check_agreement_bosco(uint32_t n, uint32_t f, uint32_t b, uint32_t k,
                                  bool asymmetric, uint32_t jobs) {
  CheckReport rep;
  rep.name = asymmetric ? "bosco-agreement-asymmetric" : "bosco-agreement";
  rep.precondition_met = n > 3 * f;
  const Bosco bos = Bosco::make(n, f, asymmetric);
  const Config cfg = Bosco::config(n, f, b);
  const uint32_t g = n - b;
  const auto inputs = bool_vectors(g);

  std::vector<BoscoInputResult> results(inputs.size());
  if (jobs > 1) {
    std::vector<std::future<void>> futures;
    std::atomic<size_t> next{0};
    for (uint32_t j = 0; j < jobs; ++j)
      futures.push_back(std::async(std::launch::async, [&]() {
        for (size_t i = next.fetch_add(1); i < inputs.size(); i = next.fetch_add(1))
          results[i] = scan_bosco_input(bos, cfg, inputs[i], n, f, asymmetric);
      }));
    for (auto& fu : futures) fu.get();
  } else {
    for (size_t i = 0; i < inputs.size(); ++i)
      results[i] = scan_bosco_input(bos, cfg, inputs[i], n, f, asymmetric);
  }

  rep.holds = true;
  std::map<std::vector<Value>, const BoscoInputResult*> by_input;
  for (size_t i = 0; i < inputs.size(); ++i) {
    rep.cases += results[i].cases;
    by_input[inputs[i]] = &results[i];
    if (!results[i].ok) {
      rep.holds = false;
      if (!rep.details.contains("violation")) {
        std::string in;
        for (const auto& v : inputs[i]) in += v.str();
        rep.details["violation"] = {{"input", in}, {"why", results[i].violation}};
      }
    }
  }

  // Chained UC preservation: starting from every UC_B input, next-iteration
  // inputs of up to k further iterations stay inside the UC_B set.
  nlohmann::json chain = nlohmann::json::array();
  for (bool B : {false, true}) {
    std::set<std::vector<Value>> level;
    for (const auto& x : inputs)
      if (uc_bosco(x, B, n, f, asymmetric)) level.insert(x);
    nlohmann::json sizes = nlohmann::json::array();
    sizes.push_back(level.size());
    for (uint32_t step = 0; step < k; ++step) {
      std::set<std::vector<Value>> next;
      for (const auto& x : level) {
        const BoscoInputResult* r = by_input.at(x);
        for (const auto& z : r->next_inputs) {
          if (!uc_bosco(z, B, n, f, asymmetric)) rep.holds = false;
          next.insert(z);
        }
      }
      level = std::move(next);
      sizes.push_back(level.size());
    }
    chain.push_back({{"value", B}, {"level_sizes", sizes}});
  }
  rep.details["uc_chain"] = chain;
  return rep;
}

// ---------------------------------------------------------------------------
// check_agreement_seqpaxos
// ---------------------------------------------------------------------------

CheckReport check_agreement_seqpaxos(uint32_t n, uint32_t f, uint32_t vsize,
                                     uint32_t k) {
  CheckReport rep;
  rep.name = "seqpaxos-agreement";
  rep.precondition_met = n > 2 * f;
  const SeqPaxos sp = SeqPaxos::make(n, f, vsize, k + 1);
  const Config cfg = SeqPaxos::config(n, f);
  rep.holds = true;

  auto fail = [&](const std::string& why, const denote::DistRecord& rec) {
    rep.holds = false;
    if (!rep.details.contains("violation"))
      rep.details["violation"] = {{"why", why},
                                  {"record", denote::record_to_json(rec).dump()}};
  };

  // Propagation checks memoized on (leader round, replica states).
  std::map<std::pair<uint32_t, std::vector<Value>>, std::set<uint32_t>> propagated;

  for (uint32_t i = 0; i <= k; ++i) {
    const denote::OutputSet out = denote::denote_prog(cfg, {}, sp.closed(i));
    for (const auto& rec : out) {
      rep.cases++;
      const Value& leader = rec.at(kLeader).at(0);
      const Value& dec = leader.first();
      const uint32_t round = leader.second().as_nat();
      const std::vector<Value>& xs = rec.at(kReplica);

      // Iteration-inputs lemma bullets.
      if (round != i + 2) fail("leader round != i + 2", rec);
      for (const Value& x : xs) {
        const uint32_t r = x.second().as_nat();
        if (r >= i + 2) fail("replica round >= i + 2", rec);
        if (r > 0 && !x.first().is_some()) fail("positive round without a value", rec);
      }
      for (const Value& u : xs)
        for (const Value& w : xs)
          if (u.second() == w.second() && !(u == w))
            fail("equal rounds with different pairs", rec);

      // Obligation (1): a decision implies UC_D.
      if (dec.is_some()) {
        const uint32_t D = dec.some_inner().as_nat();
        if (!uc_seqpaxos(cfg, sp, xs, D)) fail("decision without UC_D", rec);
      }

      // Obligation (2): UC_D propagates one iteration and confines decisions.
      for (uint32_t D = 0; D < vsize; ++D) {
        if (!uc_seqpaxos(cfg, sp, xs, D)) continue;
        auto key = std::make_pair(round, xs);
        if (propagated[key].count(D)) continue;
        propagated[key].insert(D);
        const denote::OutputSet next =
            denote::denote_prog(cfg, {}, sp.closed_from(round, xs, 0));
        for (const auto& rec2 : next) {
          rep.cases++;
          const Value& dec2 = rec2.at(kLeader).at(0).first();
          if (dec2.is_some() && dec2.some_inner().as_nat() != D)
            fail("later decision disagrees under UC_D", rec2);
          if (!uc_seqpaxos(cfg, sp, rec2.at(kReplica), D))
            fail("UC_D not preserved", rec2);
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// check_counting_lemma
// ---------------------------------------------------------------------------

CheckReport check_counting_lemma(uint32_t n, uint32_t f, uint32_t b) {
  CheckReport rep;
  rep.name = "counting-lemma";
  const Config cfg({{kReplica, {n, f, b}}});
  const uint32_t g = n - b;
  rep.holds = true;
  for (const auto& l : bool_vectors(g)) {
    const auto lists = denote::netwk(cfg, kReplica, l, ValueType::bool_type());
    for (bool vb : {false, true}) {
      const Value v = Value::boolean(vb);
      const int64_t base = denote::count_occurrences(v, l);
      bool tight = false;
      for (const auto& lp : lists) {
        rep.cases++;
        const int64_t c = denote::count_occurrences(v, lp);
        if (c < base - int64_t(f) || c > base + int64_t(b)) {
          rep.holds = false;
          if (!rep.details.contains("violation")) {
            std::string in;
            for (const auto& x : l) in += x.str();
            rep.details["violation"] = {{"input", in}, {"count", c}};
          }
        }
        if (c == base + int64_t(b)) tight = true;
      }
      if (b > 0 && !tight) {
        rep.holds = false;
        rep.details["violation"] = {{"why", "upper bound not tight"}};
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// build_from_spec
// ---------------------------------------------------------------------------

BuiltProtocol build_from_spec(const nlohmann::json& spec) {
  const std::string protocol = spec.at("protocol").get<std::string>();
  BuiltProtocol out;
  out.spec = spec;
  if (protocol == "simplevote") {
    const uint32_t n = spec.at("n").get<uint32_t>();
    const uint32_t f = spec.at("f").get<uint32_t>();
    const uint32_t b = spec.at("b").get<uint32_t>();
    const bool p = spec.at("p").get<bool>();
    std::vector<bool> xs;
    for (const auto& j : spec.at("x")) xs.push_back(j.get<bool>());
    if (xs.size() != n - b)
      throw Error("simplevote expects " + std::to_string(n - b) + " inputs");
    const SimpleVote sv = SimpleVote::make(n, f);
    out.config = SimpleVote::config(n, f, b);
    out.program = sv.closed(p, xs);
    return out;
  }
  if (protocol == "bosco") {
    const uint32_t n = spec.at("n").get<uint32_t>();
    const uint32_t f = spec.at("f").get<uint32_t>();
    const uint32_t b = spec.at("b").get<uint32_t>();
    const uint32_t iterations = spec.value("iterations", 0u);
    const bool asymmetric = spec.value("asymmetric", false);
    std::vector<bool> xs;
    for (const auto& j : spec.at("inputs")) xs.push_back(j.get<bool>());
    if (xs.size() != n - b)
      throw Error("bosco expects " + std::to_string(n - b) + " inputs");
    const Bosco bos = Bosco::make(n, f, asymmetric);
    out.config = Bosco::config(n, f, b);
    out.program = bos.closed(xs, iterations);
    return out;
  }
  if (protocol == "seqpaxos") {
    const uint32_t n = spec.at("n").get<uint32_t>();
    const uint32_t f = spec.at("f").get<uint32_t>();
    const uint32_t vsize = spec.value("vsize", 2u);
    const uint32_t iterations = spec.value("iterations", 0u);
    const SeqPaxos sp = SeqPaxos::make(n, f, vsize, iterations);
    out.config = SeqPaxos::config(n, f);
    out.program = sp.closed(iterations);
    return out;
  }
  throw Error("unknown protocol: " + protocol);
}

}  // namespace choreo::protocols
