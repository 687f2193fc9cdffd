// Composition of node and channel transition systems into the global
// asynchronous system: label projection, trace alignment, exhaustive
// exploration, output extraction, and the adequacy check.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "choreo/channel.hpp"
#include "choreo/denote.hpp"
#include "choreo/hll.hpp"
#include "choreo/lll.hpp"

namespace choreo::global {

using denote::Config;
using denote::DistRecord;
using denote::NodeId;
using denote::OutputSet;
using values::Value;

struct GlobalLabel {
  enum class Kind { Send, Byz, Receive };
  Kind kind;
  NodeId node;     // Send/Receive: the stepping node; Byz: the Byzantine sender
  NodeId byz_to;   // Byz: the targeted receiver
  hll::ChannelId chan;
  Value payload;            // Send/Byz
  std::vector<Value> msgs;  // Receive

  static GlobalLabel send(NodeId n, hll::ChannelId c, Value v);
  static GlobalLabel byz(NodeId from, NodeId to, hll::ChannelId c, Value v);
  static GlobalLabel receive(NodeId n, hll::ChannelId c, std::vector<Value> msgs);

  auto operator<=>(const GlobalLabel&) const = default;
  std::string str() const;
};

struct GlobalState {
  std::map<NodeId, lll::NodeProgram> nodes;
  std::map<hll::ChannelId, channel::ChannelState> channels;
  bool operator==(const GlobalState&) const = default;
};

struct Budget {
  uint64_t max_states = 4'000'000;
  uint32_t max_depth = 100'000;
  double seconds = 600.0;
};

struct Options {
  // Generate Byzantine sends toward receivers that already received (the
  // erasure-lemma test lifts the default restriction).
  bool byz_after_receive = false;
  // Dedup visited global states by canonical key.
  bool dedup = true;
  // Disable multiset dedup of receive lists and fold-outcome enumeration
  // shortcuts; the literal oracle path.
  bool materialize_lists = false;
};

struct ExploreResult {
  OutputSet outputs;
  bool exhaustive = true;
  uint64_t states = 0;
  uint64_t completed_states = 0;
};

struct ExploreHooks {
  // Called once per completed state (post-dedup) with the trace that reached
  // it; returning false aborts the exploration.
  std::function<bool(const GlobalState&, const DistRecord&,
                     const std::vector<GlobalLabel>&)>
      on_completed;
};

struct ReplayResult {
  bool ok = false;
  size_t failed_index = 0;
  std::optional<GlobalState> final_state;
};

class System {
 public:
  System(hll::ProgramPtr program, Config cfg, Options opts = {});

  const hll::ChannelContext& delta() const { return typing_.channels; }
  const hll::RecordType& result_type() const { return typing_.result; }
  const Config& config() const { return cfg_; }
  const Options& options() const { return opts_; }
  const hll::ProgramPtr& program() const { return program_; }
  const channel::ChannelInfo& channel_info(const hll::ChannelId& c) const;

  GlobalState initial() const;
  std::vector<GlobalLabel> enabled(const GlobalState& s) const;
  std::optional<GlobalState> step(const GlobalState& s, const GlobalLabel& l) const;
  bool completed(const GlobalState& s) const;
  // Record of every role's returned values (throws when not completed).
  DistRecord extract(const GlobalState& s) const;
  // Restricted to the roles of the program's result type, comparable with the
  // denotational output set.
  DistRecord extract_output(const GlobalState& s) const;

  ExploreResult explore(const Budget& budget, const ExploreHooks& hooks = {}) const;
  // One random permissible maximal trace, reproducible by seed.
  std::vector<GlobalLabel> simulate(uint64_t seed) const;
  ReplayResult replay(std::span<const GlobalLabel> labels) const;

  std::string state_key(const GlobalState& s) const;

  nlohmann::json label_to_json(const GlobalLabel& l) const;
  GlobalLabel label_from_json(const nlohmann::json& j) const;

 private:
  hll::ProgramPtr program_;
  Config cfg_;
  Options opts_;
  hll::RoleSet roles_;
  hll::Typing typing_;
  std::map<hll::ChannelId, channel::ChannelInfo> chan_infos_;
  std::map<hll::Role, std::shared_ptr<const lll::NodeCode>> codes_;
};

// Concatenation, in delta order, of each channel's label subsequence; a
// permutation of the input that keeps per-channel relative order.
std::vector<GlobalLabel> align(const hll::ChannelContext& delta,
                               std::span<const GlobalLabel> labels);

// Projections of a global label sequence to component-local label sequences.
std::vector<lll::NodeLabel> project_to_node(std::span<const GlobalLabel> labels,
                                            const NodeId& node);
std::vector<channel::Label> project_to_channel(std::span<const GlobalLabel> labels,
                                               const hll::ChannelId& chan,
                                               const System& sys);

// A random interleaving that preserves every component's label subsequence
// (hence, by the composition lemma, replays to the same final state).
std::vector<GlobalLabel> restitch_random(std::span<const GlobalLabel> labels,
                                         uint64_t seed);

struct AdequacyReport {
  bool subset = false;
  bool equal = false;
  bool exhaustive = false;
  OutputSet operational;
  OutputSet denotational;
  std::optional<std::vector<GlobalLabel>> counterexample;
  bool inconclusive() const { return !exhaustive && subset; }
};

AdequacyReport check_adequacy(const hll::ProgramPtr& p, const Config& cfg,
                              const Budget& budget, const Options& opts = {});

// Big-step operational semantics for a closed, normalized program: per Comm
// in delta order, enumerate per-receiver lists from the literal Netwk set and
// fold; the middle of the operational/denotational sandwich.
OutputSet bigstep_run(const hll::ProgramPtr& normalized, const Config& cfg);

}  // namespace choreo::global
