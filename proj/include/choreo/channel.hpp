// Single-use channel labeled transition system: Byzantine sends, the
// asynchrony relation Netwk_LLL, and the bookkeeping used by the adequacy
// argument.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "choreo/denote.hpp"
#include "choreo/hll.hpp"

namespace choreo::channel {

using values::Value;
using values::ValueType;

// Static channel parameters derived from the channel context entry and the
// configuration. Node indices are role-local: good senders [0, good_senders),
// Byzantine senders [0, byz_senders) (offset by good_senders in global ids),
// receivers [0, receivers).
struct ChannelInfo {
  hll::ChannelId id;
  hll::Role sender_role;
  hll::Role receiver_role;
  ValueType msg_type;
  uint32_t good_senders = 0;
  uint32_t byz_senders = 0;
  uint32_t receivers = 0;
  uint32_t lo = 0;  // n_S - f_S
  bool same_role() const { return sender_role == receiver_role; }

  static ChannelInfo make(const hll::ChannelEntry& entry,
                          const denote::Config& cfg);
};

struct Label {
  enum class Kind { Send, ByzSend, Receive };
  Kind kind;
  uint32_t sender = 0;      // Send: good sender index
  uint32_t byz_sender = 0;  // ByzSend: Byzantine sender index
  uint32_t receiver = 0;    // ByzSend/Receive
  Value payload;            // Send/ByzSend
  std::vector<Value> msgs;  // Receive

  static Label send(uint32_t s, Value v);
  static Label byz_send(uint32_t sb, uint32_t r, Value v);
  static Label receive(uint32_t r, std::vector<Value> msgs);
  bool operator==(const Label&) const = default;
};

struct ChannelState {
  std::set<uint32_t> sent;      // F_s
  std::set<uint32_t> received;  // F_r
  std::map<uint32_t, std::set<uint32_t>> byz_from;   // F_b
  std::map<uint32_t, std::vector<Value>> inbox;      // M
  std::vector<Value> sent_log;                       // M_s (send order)
  std::map<uint32_t, std::vector<Value>> recv_log;   // M_r

  static ChannelState initial(const ChannelInfo& info);
  bool operator==(const ChannelState&) const = default;
  // Canonical dedup identity. Inbox order is irrelevant to the dynamics
  // (receive lists are closed under permutation) and the two bookkeeping
  // logs feed nothing downstream, so states differing only there coincide.
  void append_dedup_key(std::string& out) const;
};

// (perm l) >>= (trunc . lo): reordering and dropping, no Byzantine addition.
std::set<std::vector<Value>> netwk_lll(std::span<const Value> l, uint32_t lo);
// Membership in netwk_lll(pool, lo) without enumeration.
bool netwk_lll_member(std::span<const Value> candidate,
                      std::span<const Value> pool, uint32_t lo);

// One transition; std::nullopt when a premise fails.
std::optional<ChannelState> channel_step(const ChannelInfo& info,
                                         const ChannelState& st, const Label& l);

// F_s = sender(c) and F_r = receiver(c).
bool is_finished(const ChannelInfo& info, const ChannelState& st);

// The recorded per-receiver lists; throws Error when the channel is not
// finished.
std::map<uint32_t, std::vector<Value>> extract_bigstep(const ChannelInfo& info,
                                                       const ChannelState& st);

// The lists receiver r may receive now. With multiset_dedup one canonical
// representative per sub-multiset is produced (sound when the receiver's
// combining function is permutation-invariant).
std::vector<std::vector<Value>> enabled_receive_lists(const ChannelInfo& info,
                                                      const ChannelState& st,
                                                      uint32_t r,
                                                      bool multiset_dedup);

}  // namespace choreo::channel
