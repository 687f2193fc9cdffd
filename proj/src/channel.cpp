#include "choreo/channel.hpp"

#include <algorithm>
#include <functional>

namespace choreo::channel {

ChannelInfo ChannelInfo::make(const hll::ChannelEntry& entry,
                              const denote::Config& cfg) {
  ChannelInfo info;
  info.id = entry.id;
  info.sender_role = entry.sender;
  info.receiver_role = entry.receiver;
  info.msg_type = entry.msg_type;
  const denote::RoleConfig& sc = cfg.at(entry.sender);
  const denote::RoleConfig& rc = cfg.at(entry.receiver);
  info.good_senders = sc.good();
  info.byz_senders = sc.b;
  info.receivers = rc.good();
  info.lo = sc.lo();
  return info;
}

Label Label::send(uint32_t s, Value v) {
  return Label{Kind::Send, s, 0, 0, std::move(v), {}};
}
Label Label::byz_send(uint32_t sb, uint32_t r, Value v) {
  return Label{Kind::ByzSend, 0, sb, r, std::move(v), {}};
}
Label Label::receive(uint32_t r, std::vector<Value> msgs) {
  return Label{Kind::Receive, 0, 0, r, Value::unit(), std::move(msgs)};
}

ChannelState ChannelState::initial(const ChannelInfo& info) {
  ChannelState st;
  for (uint32_t r = 0; r < info.receivers; ++r) {
    st.byz_from[r] = {};
    st.inbox[r] = {};
  }
  return st;
}

void ChannelState::append_dedup_key(std::string& out) const {
  out += "{s:";
  for (uint32_t s : sent) out += std::to_string(s) + ",";
  out += ";r:";
  for (uint32_t r : received) out += std::to_string(r) + ",";
  out += ";b:";
  for (const auto& [r, sbs] : byz_from) {
    out += std::to_string(r) + "<";
    for (uint32_t sb : sbs) out += std::to_string(sb) + ",";
    out += ">";
  }
  out += ";M:";
  for (const auto& [r, msgs] : inbox) {
    std::vector<Value> sorted = msgs;
    std::sort(sorted.begin(), sorted.end());
    out += std::to_string(r) + "[";
    for (const Value& v : sorted) out += v.str() + ",";
    out += "]";
  }
  out += "}";
}

std::set<std::vector<Value>> netwk_lll(std::span<const Value> l, uint32_t lo) {
  std::set<std::vector<Value>> out;
  std::vector<Value> sorted(l.begin(), l.end());
  std::sort(sorted.begin(), sorted.end());
  if (lo > sorted.size()) return out;
  do {
    for (size_t len = lo; len <= sorted.size(); ++len)
      out.insert(std::vector<Value>(sorted.begin(), sorted.begin() + len));
  } while (std::next_permutation(sorted.begin(), sorted.end()));
  return out;
}

bool netwk_lll_member(std::span<const Value> candidate,
                      std::span<const Value> pool, uint32_t lo) {
  if (candidate.size() < lo || candidate.size() > pool.size()) return false;
  // Multiset inclusion.
  std::vector<Value> c(candidate.begin(), candidate.end());
  std::vector<Value> p(pool.begin(), pool.end());
  std::sort(c.begin(), c.end());
  std::sort(p.begin(), p.end());
  return std::includes(p.begin(), p.end(), c.begin(), c.end());
}

std::optional<ChannelState> channel_step(const ChannelInfo& info,
                                         const ChannelState& st, const Label& l) {
  switch (l.kind) {
    case Label::Kind::Send: {
      if (l.sender >= info.good_senders) return std::nullopt;
      if (st.sent.count(l.sender)) return std::nullopt;
      if (!(l.payload.type() == info.msg_type)) return std::nullopt;
      ChannelState next = st;
      next.sent.insert(l.sender);
      for (auto& [r, msgs] : next.inbox) msgs.push_back(l.payload);
      next.sent_log.push_back(l.payload);
      return next;
    }
    case Label::Kind::ByzSend: {
      if (l.byz_sender >= info.byz_senders || l.receiver >= info.receivers)
        return std::nullopt;
      if (!(l.payload.type() == info.msg_type)) return std::nullopt;
      const auto& fb = st.byz_from.at(l.receiver);
      if (fb.count(l.byz_sender)) return std::nullopt;
      ChannelState next = st;
      next.byz_from[l.receiver].insert(l.byz_sender);
      next.inbox[l.receiver].push_back(l.payload);
      return next;
    }
    case Label::Kind::Receive: {
      if (l.receiver >= info.receivers) return std::nullopt;
      if (st.received.count(l.receiver)) return std::nullopt;
      // A receiver that is also a sender must send first.
      if (info.same_role() && !st.sent.count(l.receiver)) return std::nullopt;
      if (!netwk_lll_member(l.msgs, st.inbox.at(l.receiver), info.lo))
        return std::nullopt;
      ChannelState next = st;
      next.received.insert(l.receiver);
      next.recv_log[l.receiver] = l.msgs;
      return next;
    }
  }
  return std::nullopt;
}

bool is_finished(const ChannelInfo& info, const ChannelState& st) {
  return st.sent.size() == info.good_senders &&
         st.received.size() == info.receivers;
}

std::map<uint32_t, std::vector<Value>> extract_bigstep(const ChannelInfo& info,
                                                       const ChannelState& st) {
  if (!is_finished(info, st))
    throw Error("extract_bigstep on an unfinished channel " + info.id.str());
  return st.recv_log;
}

std::vector<std::vector<Value>> enabled_receive_lists(const ChannelInfo& info,
                                                      const ChannelState& st,
                                                      uint32_t r,
                                                      bool multiset_dedup) {
  const std::vector<Value>& pool = st.inbox.at(r);
  std::vector<std::vector<Value>> out;
  if (pool.size() < info.lo) return out;
  if (multiset_dedup) {
    // One sorted representative per sub-multiset with size >= lo.
    std::vector<Value> sorted = pool;
    std::sort(sorted.begin(), sorted.end());
    std::set<std::vector<Value>> reps;
    std::vector<Value> cur;
    std::function<void(size_t)> rec = [&](size_t i) {
      if (i == sorted.size()) {
        if (cur.size() >= info.lo) reps.insert(cur);
        return;
      }
      cur.push_back(sorted[i]);
      rec(i + 1);
      cur.pop_back();
      // Skip the whole run of equal elements when not taking this one.
      size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      rec(j);
    };
    rec(0);
    out.assign(reps.begin(), reps.end());
  } else {
    auto full = netwk_lll(pool, info.lo);
    out.assign(full.begin(), full.end());
  }
  return out;
}

}  // namespace choreo::channel
