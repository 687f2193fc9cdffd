// The built-in protocols (SimpleVote, Bosco, SeqPaxos) and executable
// versions of their safety theorems as enumerative property suites.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "choreo/denote.hpp"
#include "choreo/global.hpp"
#include "choreo/hll.hpp"

namespace choreo::protocols {

using denote::Config;
using values::Value;
using values::ValueType;

inline const hll::Role kLeader{"L"};
inline const hll::Role kReplica{"R"};

// ---------------------------------------------------------------------------
// SimpleVote: replicas vote, the leader counts and decides (threshold n - 2f).
// ---------------------------------------------------------------------------
struct SimpleVote {
  uint32_t n = 0, f = 0;
  values::Registry registry;
  hll::ProgramPtr program;  // free: p at L (bool), x at R (bool)
  hll::TypeEnv gamma;
  hll::RoleSet roles{kLeader, kReplica};

  static SimpleVote make(uint32_t n, uint32_t f);
  static Config config(uint32_t n, uint32_t f, uint32_t b);
  hll::ProgramPtr closed(bool leader_input, const std::vector<bool>& replica_inputs) const;
};

// ---------------------------------------------------------------------------
// Binary Bosco: one broadcast round per iteration, threshold 2*cnt > n + 3f.
// ---------------------------------------------------------------------------
struct Bosco {
  uint32_t n = 0, f = 0;
  bool asymmetric = false;  // decide with >= instead of > when newv is true
  values::Registry registry;
  hll::ProtocolBody body;  // input {R: bool}, output {R: (opt bool * bool)}
  ValueType count_pair_type;
  ValueType decision_type;  // (opt bool * bool)

  static Bosco make(uint32_t n, uint32_t f, bool asymmetric = false);
  static Config config(uint32_t n, uint32_t f, uint32_t b);
  hll::ProgramPtr closed(const std::vector<bool>& inputs, uint32_t iterations) const;
};

// ---------------------------------------------------------------------------
// SeqPaxos: three communication rounds per iteration; leader decides when
// more than f replicas echo the current round.
// ---------------------------------------------------------------------------
struct SeqPaxos {
  uint32_t n = 0, f = 0;      // replica count and crash bound
  uint32_t vsize = 2;         // |V|; V = nat <= vsize-1
  uint32_t round_max = 0;     // round numbers bounded by 2 + max iterations
  values::Registry registry;
  hll::ProtocolBody body;
  ValueType vtype, round_type, state_type;  // state = (opt V * round)
  denote::DistRecord init;                  // {L: [1], R: [(none,0)] * n}
  std::vector<uint32_t> default_table;      // proposal per round

  static SeqPaxos make(uint32_t n, uint32_t f, uint32_t vsize,
                       uint32_t max_iterations,
                       std::vector<uint32_t> default_table = {});
  static Config config(uint32_t n, uint32_t f);
  hll::ProgramPtr closed(uint32_t iterations) const;  // from init
  hll::ProgramPtr closed_from(uint32_t leader_round,
                              const std::vector<Value>& replica_states,
                              uint32_t iterations) const;
  Value state_value(std::optional<uint32_t> v, uint32_t round) const;
};

// ---------------------------------------------------------------------------
// Enumerative property checks.
// ---------------------------------------------------------------------------
struct CheckReport {
  std::string name;
  bool holds = false;
  bool exhaustive = true;
  bool precondition_met = true;
  uint64_t cases = 0;
  nlohmann::json details = nlohmann::json::object();
  nlohmann::json to_json() const;
};

// Strongly one-step: with all-B inputs every node outputs (Some B, B);
// expected to hold when n > 7f.
CheckReport check_one_step(uint32_t n, uint32_t f, uint32_t b);

// Agreement' obligations for Bosco: (1) a decision implies the univalent
// condition UC_B on the input; (2) UC_B implies Comply_B of outputs and UC_B
// of next-iteration inputs, chained k levels deep. Also scans that no input
// can decide two different values.
CheckReport check_agreement_bosco(uint32_t n, uint32_t f, uint32_t b, uint32_t k,
                                  bool asymmetric = false, uint32_t jobs = 1);

// SeqPaxos agreement obligations plus the four iteration-inputs lemma bullets
// at every enumerated output of iter^i from init, i <= k.
CheckReport check_agreement_seqpaxos(uint32_t n, uint32_t f, uint32_t vsize,
                                     uint32_t k);

// Netwk counting bounds: #_v(l) - f <= #_v(l') <= #_v(l) + b, with tightness
// witnesses for the upper bound when b > 0.
CheckReport check_counting_lemma(uint32_t n, uint32_t f, uint32_t b);

// The univalent condition used by the Bosco proofs.
bool uc_bosco(std::span<const Value> inputs, bool b_value, uint32_t n, uint32_t f,
              bool asymmetric = false);
// UC_D for SeqPaxos: every Netwk list folds (fmaxr) to fst = Some D.
bool uc_seqpaxos(const Config& cfg, const SeqPaxos& sp,
                 std::span<const Value> replica_states, uint32_t decided);

// ---------------------------------------------------------------------------
// CLI-facing construction from a run spec (also used to reconstruct the
// program when replaying a trace file).
// ---------------------------------------------------------------------------
struct BuiltProtocol {
  Config config;
  hll::ProgramPtr program;  // closed
  nlohmann::json spec;
};
BuiltProtocol build_from_spec(const nlohmann::json& spec);

}  // namespace choreo::protocols
