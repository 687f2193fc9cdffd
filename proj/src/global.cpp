#include "choreo/global.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <set>
#include <sstream>

namespace choreo::global {

using channel::ChannelInfo;
using channel::ChannelState;
using hll::ChannelId;
using hll::Role;
using lll::NodeLabel;
using lll::NodeProgram;

// ---------------------------------------------------------------------------
// GlobalLabel
// ---------------------------------------------------------------------------

GlobalLabel GlobalLabel::send(NodeId n, ChannelId c, Value v) {
  return GlobalLabel{Kind::Send, std::move(n), {}, std::move(c), std::move(v), {}};
}
GlobalLabel GlobalLabel::byz(NodeId from, NodeId to, ChannelId c, Value v) {
  return GlobalLabel{Kind::Byz, std::move(from), std::move(to), std::move(c),
                     std::move(v), {}};
}
GlobalLabel GlobalLabel::receive(NodeId n, ChannelId c, std::vector<Value> msgs) {
  return GlobalLabel{Kind::Receive, std::move(n),      {}, std::move(c),
                     Value::unit(), std::move(msgs)};
}

std::string GlobalLabel::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Send:
      os << node.str() << " send " << chan.str() << " " << payload.str();
      break;
    case Kind::Byz:
      os << node.str() << " byz_send " << chan.str() << " -> " << byz_to.str()
         << " " << payload.str();
      break;
    case Kind::Receive: {
      os << node.str() << " receive " << chan.str() << " [";
      for (size_t i = 0; i < msgs.size(); ++i)
        os << (i ? " " : "") << msgs[i].str();
      os << "]";
      break;
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// System
// ---------------------------------------------------------------------------

System::System(hll::ProgramPtr program, Config cfg, Options opts)
    : program_(std::move(program)), cfg_(std::move(cfg)), opts_(opts) {
  for (const auto& [role, _] : cfg_.roles()) roles_.insert(role);
  typing_ = hll::typecheck_prog({}, roles_, *program_);
  for (const auto& entry : typing_.channels)
    chan_infos_.emplace(entry.id, ChannelInfo::make(entry, cfg_));
  for (const auto& role : roles_)
    codes_.emplace(role, lll::compile_role(*program_, role));
}

const ChannelInfo& System::channel_info(const ChannelId& c) const {
  auto it = chan_infos_.find(c);
  if (it == chan_infos_.end()) throw Error("unknown channel " + c.str());
  return it->second;
}

GlobalState System::initial() const {
  GlobalState s;
  for (const auto& [role, rc] : cfg_.roles()) {
    const auto& code = codes_.at(role);
    for (uint32_t i = 0; i < rc.good(); ++i)
      s.nodes.emplace(NodeId{role, i}, NodeProgram::from_code(code, i, {}));
  }
  for (const auto& [id, info] : chan_infos_)
    s.channels.emplace(id, ChannelState::initial(info));
  return s;
}

std::vector<GlobalLabel> System::enabled(const GlobalState& s) const {
  std::vector<GlobalLabel> out;
  for (const auto& [nid, np] : s.nodes) {
    if (np.kind() == NodeProgram::Kind::Send) {
      const ChannelId& c = np.channel();
      const ChannelState& cs = s.channels.at(c);
      if (!cs.sent.count(nid.index))
        out.push_back(GlobalLabel::send(nid, c, np.send_payload()));
    } else if (np.kind() == NodeProgram::Kind::Recv) {
      const ChannelId& c = np.channel();
      const ChannelInfo& info = chan_infos_.at(c);
      const ChannelState& cs = s.channels.at(c);
      if (cs.received.count(nid.index)) continue;
      if (info.same_role() && !cs.sent.count(nid.index)) continue;
      bool dedup_lists = false;
      if (!opts_.materialize_lists) {
        auto fold = np.receive_fold();
        dedup_lists = fold && fold->first.commutative();
      }
      for (auto& msgs :
           channel::enabled_receive_lists(info, cs, nid.index, dedup_lists))
        out.push_back(GlobalLabel::receive(nid, c, std::move(msgs)));
    }
  }
  for (const auto& [cid, info] : chan_infos_) {
    if (info.byz_senders == 0) continue;
    const ChannelState& cs = s.channels.at(cid);
    const std::vector<Value> universe = values::enumerate(info.msg_type);
    for (uint32_t sb = 0; sb < info.byz_senders; ++sb) {
      for (uint32_t r = 0; r < info.receivers; ++r) {
        if (cs.byz_from.at(r).count(sb)) continue;
        if (!opts_.byz_after_receive && cs.received.count(r)) continue;
        NodeId from{info.sender_role, info.good_senders + sb};
        NodeId to{info.receiver_role, r};
        for (const Value& v : universe)
          out.push_back(GlobalLabel::byz(from, to, cid, v));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<GlobalState> System::step(const GlobalState& s,
                                        const GlobalLabel& l) const {
  auto cit = s.channels.find(l.chan);
  if (cit == s.channels.end()) return std::nullopt;
  const ChannelInfo& info = chan_infos_.at(l.chan);
  switch (l.kind) {
    case GlobalLabel::Kind::Send: {
      auto nit = s.nodes.find(l.node);
      if (nit == s.nodes.end()) return std::nullopt;
      auto next_node = nit->second.step(NodeLabel::send(l.chan, l.payload));
      if (!next_node) return std::nullopt;
      auto next_chan = channel::channel_step(
          info, cit->second, channel::Label::send(l.node.index, l.payload));
      if (!next_chan) return std::nullopt;
      GlobalState out = s;
      out.nodes.at(l.node) = std::move(*next_node);
      out.channels.at(l.chan) = std::move(*next_chan);
      return out;
    }
    case GlobalLabel::Kind::Byz: {
      if (!(l.node.role == info.sender_role)) return std::nullopt;
      if (l.node.index < info.good_senders ||
          l.node.index >= info.good_senders + info.byz_senders)
        return std::nullopt;
      if (!(l.byz_to.role == info.receiver_role)) return std::nullopt;
      auto next_chan = channel::channel_step(
          info, cit->second,
          channel::Label::byz_send(l.node.index - info.good_senders,
                                   l.byz_to.index, l.payload));
      if (!next_chan) return std::nullopt;
      GlobalState out = s;
      out.channels.at(l.chan) = std::move(*next_chan);
      return out;
    }
    case GlobalLabel::Kind::Receive: {
      auto nit = s.nodes.find(l.node);
      if (nit == s.nodes.end()) return std::nullopt;
      auto next_chan = channel::channel_step(
          info, cit->second, channel::Label::receive(l.node.index, l.msgs));
      if (!next_chan) return std::nullopt;
      auto next_node = nit->second.step(NodeLabel::receive(l.chan, l.msgs));
      if (!next_node) return std::nullopt;
      GlobalState out = s;
      out.nodes.at(l.node) = std::move(*next_node);
      out.channels.at(l.chan) = std::move(*next_chan);
      return out;
    }
  }
  return std::nullopt;
}

bool System::completed(const GlobalState& s) const {
  for (const auto& [_, np] : s.nodes)
    if (np.kind() != NodeProgram::Kind::Return) return false;
  return true;
}

DistRecord System::extract(const GlobalState& s) const {
  if (!completed(s)) throw Error("extract on a non-completed state");
  DistRecord out;
  for (const auto& [nid, np] : s.nodes) out[nid.role].push_back(np.return_value());
  return out;
}

DistRecord System::extract_output(const GlobalState& s) const {
  DistRecord raw = extract(s);
  DistRecord out;
  for (const auto& [role, _] : typing_.result) out[role] = raw.at(role);
  return out;
}

std::string System::state_key(const GlobalState& s) const {
  std::string key;
  for (const auto& [nid, np] : s.nodes) {
    key += nid.str();
    np.append_state_key(key);
    key += ";";
  }
  for (const auto& [cid, cs] : s.channels) {
    key += cid.str();
    cs.append_dedup_key(key);
  }
  return key;
}

ExploreResult System::explore(const Budget& budget, const ExploreHooks& hooks) const {
  ExploreResult res;
  std::set<std::string> visited;
  std::vector<GlobalLabel> path;
  bool aborted = false;
  const auto start = std::chrono::steady_clock::now();
  uint64_t tick = 0;

  std::function<void(const GlobalState&)> rec = [&](const GlobalState& s) {
    if (aborted || !res.exhaustive) return;
    if (opts_.dedup && !visited.insert(state_key(s)).second) return;
    res.states++;
    if (res.states > budget.max_states || path.size() > budget.max_depth) {
      res.exhaustive = false;
      return;
    }
    if ((++tick & 1023) == 0) {
      const std::chrono::duration<double> elapsed =
          std::chrono::steady_clock::now() - start;
      if (elapsed.count() > budget.seconds) {
        res.exhaustive = false;
        return;
      }
    }
    if (completed(s)) {
      DistRecord rec_out = extract_output(s);
      const bool fresh = res.outputs.insert(rec_out).second;
      if (fresh || !opts_.dedup) res.completed_states++;
      if (hooks.on_completed && !hooks.on_completed(s, rec_out, path)) {
        aborted = true;
        return;
      }
    }
    for (const GlobalLabel& l : enabled(s)) {
      auto next = step(s, l);
      if (!next) throw Error("enabled label failed to step: " + l.str());
      path.push_back(l);
      rec(*next);
      path.pop_back();
      if (aborted || !res.exhaustive) return;
    }
  };
  rec(initial());
  if (aborted) res.exhaustive = false;
  return res;
}

std::vector<GlobalLabel> System::simulate(uint64_t seed) const {
  std::mt19937_64 rng(seed);
  GlobalState s = initial();
  std::vector<GlobalLabel> labels;
  while (true) {
    std::vector<GlobalLabel> en = enabled(s);
    if (en.empty()) break;
    const GlobalLabel& pick = en[rng() % en.size()];
    auto next = step(s, pick);
    if (!next) throw Error("simulate: enabled label failed to step");
    labels.push_back(pick);
    s = std::move(*next);
  }
  if (!completed(s)) throw Error("simulate: walk ended in a non-completed state");
  return labels;
}

ReplayResult System::replay(std::span<const GlobalLabel> labels) const {
  GlobalState s = initial();
  for (size_t i = 0; i < labels.size(); ++i) {
    auto next = step(s, labels[i]);
    if (!next) return ReplayResult{false, i, std::nullopt};
    s = std::move(*next);
  }
  return ReplayResult{true, labels.size(), std::move(s)};
}

// ---------------------------------------------------------------------------
// Alignment, projections, restitching
// ---------------------------------------------------------------------------

std::vector<GlobalLabel> align(const hll::ChannelContext& delta,
                               std::span<const GlobalLabel> labels) {
  std::vector<GlobalLabel> out;
  out.reserve(labels.size());
  for (const auto& entry : delta)
    for (const GlobalLabel& l : labels)
      if (l.chan == entry.id) out.push_back(l);
  return out;
}

std::vector<NodeLabel> project_to_node(std::span<const GlobalLabel> labels,
                                       const NodeId& node) {
  std::vector<NodeLabel> out;
  for (const GlobalLabel& l : labels) {
    if (l.kind == GlobalLabel::Kind::Send && l.node == node)
      out.push_back(NodeLabel::send(l.chan, l.payload));
    else if (l.kind == GlobalLabel::Kind::Receive && l.node == node)
      out.push_back(NodeLabel::receive(l.chan, l.msgs));
  }
  return out;
}

std::vector<channel::Label> project_to_channel(std::span<const GlobalLabel> labels,
                                               const ChannelId& chan,
                                               const System& sys) {
  const ChannelInfo& info = sys.channel_info(chan);
  std::vector<channel::Label> out;
  for (const GlobalLabel& l : labels) {
    if (!(l.chan == chan)) continue;
    switch (l.kind) {
      case GlobalLabel::Kind::Send:
        out.push_back(channel::Label::send(l.node.index, l.payload));
        break;
      case GlobalLabel::Kind::Byz:
        out.push_back(channel::Label::byz_send(l.node.index - info.good_senders,
                                               l.byz_to.index, l.payload));
        break;
      case GlobalLabel::Kind::Receive:
        out.push_back(channel::Label::receive(l.node.index, l.msgs));
        break;
    }
  }
  return out;
}

namespace {

// Component identities touched by a label: always its channel, plus the
// stepping node for send/receive.
struct Component {
  bool is_node;
  NodeId node;
  ChannelId chan;
  auto operator<=>(const Component&) const = default;
};

std::vector<Component> components_of(const GlobalLabel& l) {
  std::vector<Component> out;
  out.push_back(Component{false, {}, l.chan});
  if (l.kind != GlobalLabel::Kind::Byz)
    out.push_back(Component{true, l.node, {}});
  return out;
}

}  // namespace

std::vector<GlobalLabel> restitch_random(std::span<const GlobalLabel> labels,
                                         uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::map<Component, std::vector<size_t>> order;
  for (size_t i = 0; i < labels.size(); ++i)
    for (const Component& c : components_of(labels[i])) order[c].push_back(i);
  std::map<Component, size_t> ptr;
  std::vector<bool> emitted(labels.size(), false);
  std::vector<GlobalLabel> out;
  out.reserve(labels.size());
  while (out.size() < labels.size()) {
    std::vector<size_t> candidates;
    for (size_t i = 0; i < labels.size(); ++i) {
      if (emitted[i]) continue;
      bool ready = true;
      for (const Component& c : components_of(labels[i])) {
        const auto& seq = order.at(c);
        if (seq[ptr[c]] != i) {
          ready = false;
          break;
        }
      }
      if (ready) candidates.push_back(i);
    }
    if (candidates.empty()) throw Error("restitch: no candidate label");
    const size_t pick = candidates[rng() % candidates.size()];
    emitted[pick] = true;
    for (const Component& c : components_of(labels[pick])) ptr[c]++;
    out.push_back(labels[pick]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adequacy and the big-step oracle
// ---------------------------------------------------------------------------

AdequacyReport check_adequacy(const hll::ProgramPtr& p, const Config& cfg,
                              const Budget& budget, const Options& opts) {
  AdequacyReport report;
  denote::Options dopts;
  dopts.materialize_lists = opts.materialize_lists;
  report.denotational = denote::denote_prog(cfg, {}, p, dopts);

  System sys(p, cfg, opts);
  ExploreHooks hooks;
  hooks.on_completed = [&](const GlobalState&, const DistRecord& rec,
                           const std::vector<GlobalLabel>& path) {
    if (!report.denotational.count(rec)) {
      report.counterexample = path;
      return false;
    }
    return true;
  };
  ExploreResult res = sys.explore(budget, hooks);
  report.operational = std::move(res.outputs);
  report.subset = !report.counterexample.has_value();
  report.exhaustive = res.exhaustive && report.subset;
  report.equal = report.subset && report.exhaustive &&
                 report.operational == report.denotational;
  return report;
}

namespace {

struct BigStep {
  const Config& cfg;
  OutputSet out;

  void run(const hll::Program& p, denote::Env& env) {
    if (auto* r = std::get_if<hll::RetProg>(&p.node())) {
      DistRecord rec;
      for (const auto& [role, e] : r->record) {
        std::vector<Value> vs;
        for (auto& sv : denote::denote_expr(cfg, env, role, *e))
          vs.push_back(values::ground(sv));
        rec.emplace(role, std::move(vs));
      }
      out.insert(std::move(rec));
      return;
    }
    const auto& l = std::get<hll::LetProg>(p.node());
    const auto* c = std::get_if<hll::CommProg>(&l.bound->node());
    if (!c) throw Error("bigstep_run requires let-comm normal form");
    const Role sender = c->msg->situated_at();
    const Role receiver = c->dflt->situated_at();
    std::vector<Value> msgs;
    for (auto& sv : denote::denote_expr(cfg, env, sender, *c->msg))
      msgs.push_back(values::ground(sv));
    if (msgs.empty()) throw Error("comm with no good senders");
    const std::set<std::vector<Value>> lists =
        denote::netwk(cfg, sender, msgs, msgs.front().type());

    auto combines = denote::denote_expr(cfg, env, receiver, *c->combine);
    auto defaults = denote::denote_expr(cfg, env, receiver, *c->dflt);
    const uint32_t g = cfg.good(receiver);
    std::vector<std::set<Value>> results(g);
    for (uint32_t i = 0; i < g; ++i) {
      const auto& cl = std::get<values::Closure>(combines[i]);
      const Value& d = values::ground(defaults[i]);
      for (const auto& lst : lists) results[i].insert(values::fold(cl, d, lst));
    }
    std::vector<Value> picked;
    std::function<void()> cross = [&]() {
      if (picked.size() == g) {
        DistRecord y;
        y.emplace(receiver, picked);
        auto [it, inserted] = env.emplace(l.var, std::move(y));
        if (!inserted) throw Error("rebinding of " + l.var);
        run(*l.body, env);
        env.erase(it);
        return;
      }
      for (const Value& v : results[picked.size()]) {
        picked.push_back(v);
        cross();
        picked.pop_back();
      }
    };
    cross();
  }
};

}  // namespace

OutputSet bigstep_run(const hll::ProgramPtr& normalized, const Config& cfg) {
  if (!hll::is_normal_form(*normalized))
    throw Error("bigstep_run requires let-comm normal form");
  BigStep bs{cfg, {}};
  denote::Env env;
  bs.run(*normalized, env);
  return std::move(bs.out);
}

// ---------------------------------------------------------------------------
// Label JSON
// ---------------------------------------------------------------------------

namespace {

NodeId node_from_str(const std::string& s) {
  auto slash = s.rfind('/');
  if (slash == std::string::npos) throw Error("bad node id: " + s);
  return NodeId{Role{s.substr(0, slash)},
                static_cast<uint32_t>(std::stoul(s.substr(slash + 1)))};
}

ChannelId chan_from_str(const std::string& s) {
  auto hash = s.rfind('#');
  if (hash == std::string::npos) return ChannelId{s, 0};
  return ChannelId{s.substr(0, hash),
                   static_cast<uint32_t>(std::stoul(s.substr(hash + 1)))};
}

}  // namespace

nlohmann::json System::label_to_json(const GlobalLabel& l) const {
  switch (l.kind) {
    case GlobalLabel::Kind::Send:
      return {{"kind", "send"},
              {"node", l.node.str()},
              {"chan", l.chan.str()},
              {"v", l.payload.to_json()}};
    case GlobalLabel::Kind::Byz:
      return {{"kind", "byz"},
              {"from", l.node.str()},
              {"to", l.byz_to.str()},
              {"chan", l.chan.str()},
              {"v", l.payload.to_json()}};
    case GlobalLabel::Kind::Receive: {
      nlohmann::json msgs = nlohmann::json::array();
      for (const Value& v : l.msgs) msgs.push_back(v.to_json());
      return {{"kind", "receive"},
              {"node", l.node.str()},
              {"chan", l.chan.str()},
              {"msgs", msgs}};
    }
  }
  throw Error("unreachable");
}

GlobalLabel System::label_from_json(const nlohmann::json& j) const {
  const std::string kind = j.at("kind").get<std::string>();
  const ChannelId chan = chan_from_str(j.at("chan").get<std::string>());
  const ChannelInfo& info = channel_info(chan);
  if (kind == "send")
    return GlobalLabel::send(node_from_str(j.at("node").get<std::string>()), chan,
                             Value::from_json(j.at("v"), info.msg_type));
  if (kind == "byz")
    return GlobalLabel::byz(node_from_str(j.at("from").get<std::string>()),
                            node_from_str(j.at("to").get<std::string>()), chan,
                            Value::from_json(j.at("v"), info.msg_type));
  if (kind == "receive") {
    std::vector<Value> msgs;
    for (const auto& m : j.at("msgs"))
      msgs.push_back(Value::from_json(m, info.msg_type));
    return GlobalLabel::receive(node_from_str(j.at("node").get<std::string>()),
                                chan, std::move(msgs));
  }
  throw Error("bad label kind: " + kind);
}

}  // namespace choreo::global
