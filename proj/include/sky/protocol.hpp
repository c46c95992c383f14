#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sky/opinion.hpp"
#include "sky/random.hpp"

namespace sky {

using NodeId = std::uint32_t;

enum class NodeState : std::uint8_t { deciding, decided, confused };

// The broadcast tuple. Sender identity is taken at face value for correct
// nodes (signatures are modeled away); faulty senders may emit anything
// well-formed.
struct Message {
    NodeId sender = 0;
    std::uint32_t round = 1;
    Opinion opinion = Opinion::zero;
    NodeState state = NodeState::deciding;

    bool operator==(const Message&) const = default;
};

struct ProtocolConfig {
    std::uint32_t max_rounds = 40;
    double T = 2.0 / 3.0;
    double timeout_ms = 2000.0;
    ModelKind model = ModelKind::sky;
    double sky_mr_ratio = 0.5;
};

// One node's view of the consensus process: round counter, opinion, the
// followee/suspect partition, and a buffer holding at most one message per
// followee. Single-owner; the simulator feeds it one event at a time.
class NodeRuntime {
  public:
    enum class HandleResult : std::uint8_t {
        accepted,        // valid; detector refreshed (buffer may or may not change)
        stale,           // failed the validity check
        dropped_final,   // this node already left the deciding state
        unknown_sender,  // not a followee; recorded as a protocol violation
    };

    NodeRuntime(NodeId id, Opinion initial, std::span<const NodeId> followees, double now_ms)
        : id_(id), opinion_(initial), last_rule_ms_(now_ms) {
        slots_.reserve(followees.size());
        for (NodeId f : followees) slots_.push_back(Slot{f, {}, now_ms, false, false});
        std::sort(slots_.begin(), slots_.end(),
                  [](const Slot& a, const Slot& b) { return a.id < b.id; });
    }

    NodeId id() const { return id_; }
    std::uint32_t round() const { return round_; }
    Opinion opinion() const { return opinion_; }
    NodeState state() const { return state_; }
    DecisionKind decision() const { return decision_; }
    double last_rule_ms() const { return last_rule_ms_; }
    std::uint32_t violations() const { return violations_; }
    std::uint32_t degenerate_firings() const { return degenerate_firings_; }

    std::size_t followee_count() const { return slots_.size(); }
    std::size_t suspect_count() const {
        std::size_t n = 0;
        for (const auto& s : slots_) n += s.suspected;
        return n;
    }
    std::size_t buffered_count() const {
        std::size_t n = 0;
        for (const auto& s : slots_) n += s.has_msg;
        return n;
    }
    bool is_suspect(NodeId f) const {
        const Slot* s = find(f);
        return s != nullptr && s->suspected;
    }
    std::optional<Message> buffered(NodeId f) const {
        const Slot* s = find(f);
        if (s == nullptr || !s->has_msg) return std::nullopt;
        return s->msg;
    }

    // A message is valid if it can still matter: current-or-future round, or
    // a final (decided/confused) report.
    bool is_valid(const Message& msg) const {
        return msg.round >= round_ || msg.state == NodeState::decided ||
               msg.state == NodeState::confused;
    }

    HandleResult handle_message(const Message& msg, double now_ms) {
        if (state_ != NodeState::deciding) return HandleResult::dropped_final;
        Slot* slot = find(msg.sender);
        if (slot == nullptr) {
            ++violations_;
            return HandleResult::unknown_sender;
        }
        if (!is_valid(msg)) return HandleResult::stale;
        slot->last_valid_ms = now_ms;
        slot->suspected = false;
        const bool final_msg = msg.state != NodeState::deciding;
        if (final_msg) {
            slot->msg = msg;
            slot->has_msg = true;
            slot->final_msg = true;
        } else if (!slot->final_msg && (!slot->has_msg || msg.round > slot->msg.round)) {
            slot->msg = msg;
            slot->has_msg = true;
        }
        return HandleResult::accepted;
    }

    // Moves every followee that has been silent past the timeout and holds no
    // buffered message to the suspect list. Returns how many were added.
    std::size_t on_timeout(double now_ms, double timeout_ms) {
        if (state_ != NodeState::deciding) return 0;
        std::size_t added = 0;
        for (auto& s : slots_) {
            if (s.suspected || s.has_msg) continue;
            if (now_ms - s.last_valid_ms > timeout_ms) {
                s.suspected = true;
                ++added;
            }
        }
        return added;
    }

    // Fires iff every non-suspect followee has a buffered message. Advances a
    // round (or makes the final decision at max_rounds) and returns the
    // broadcast for it; nullopt when the trigger is not met.
    std::optional<Message> try_apply_rule(const ProtocolConfig& cfg, Rng& rng) {
        if (state_ != NodeState::deciding) return std::nullopt;
        OpinionCounts counts{0, 0};
        std::size_t active = 0;
        for (const auto& s : slots_) {
            if (s.suspected) continue;
            ++active;
            if (!s.has_msg) return std::nullopt;
            if (s.msg.opinion == Opinion::zero) ++counts.n0;
            else ++counts.n1;
        }
        if (opinion_ == Opinion::zero) ++counts.n0;
        else ++counts.n1;

        if (round_ >= cfg.max_rounds) {
            decision_ = final_decision(counts, cfg.T);
            switch (decision_) {
                case DecisionKind::decided0:
                    opinion_ = Opinion::zero;
                    state_ = NodeState::decided;
                    break;
                case DecisionKind::decided1:
                    opinion_ = Opinion::one;
                    state_ = NodeState::decided;
                    break;
                case DecisionKind::confused:
                    state_ = NodeState::confused;
                    break;
            }
            return Message{id_, round_, opinion_, state_};
        }

        if (active == 0) ++degenerate_firings_;
        opinion_ = next_opinion(cfg, counts, rng);
        ++round_;
        for (auto& s : slots_) {
            if (s.has_msg && !s.final_msg && s.msg.round < round_) s.has_msg = false;
        }
        return Message{id_, round_, opinion_, NodeState::deciding};
    }

    void note_rule_time(double now_ms) { last_rule_ms_ = now_ms; }

  private:
    struct Slot {
        NodeId id;
        Message msg{};
        double last_valid_ms = 0.0;
        bool suspected = false;
        bool has_msg = false;
        bool final_msg = false;  // buffered message is decided/confused; survives purges
    };

    Opinion next_opinion(const ProtocolConfig& cfg, const OpinionCounts& counts, Rng& rng) {
        switch (cfg.model) {
            case ModelKind::mr: return mr_rule(counts, rng);
            case ModelKind::sa: return sa_rule(counts, rng);
            case ModelKind::sky: return sky_rule(counts, rng, cfg.sky_mr_ratio);
            case ModelKind::voter:
            case ModelKind::sznajd: {
                std::vector<Opinion> ops;
                ops.reserve(slots_.size());
                for (const auto& s : slots_)
                    if (!s.suspected && s.has_msg) ops.push_back(s.msg.opinion);
                const std::size_t need = cfg.model == ModelKind::voter ? 1 : 2;
                if (ops.size() < need) {
                    if (!ops.empty()) ++degenerate_firings_;  // empty case counted by caller
                    return opinion_;  // rule inapplicable this round; keep the opinion
                }
                return cfg.model == ModelKind::voter ? voter_rule(ops, rng)
                                                     : sznajd_rule(opinion_, ops, rng);
            }
        }
        return opinion_;
    }

    const Slot* find(NodeId f) const {
        auto it = std::lower_bound(slots_.begin(), slots_.end(), f,
                                   [](const Slot& s, NodeId v) { return s.id < v; });
        if (it == slots_.end() || it->id != f) return nullptr;
        return &*it;
    }
    Slot* find(NodeId f) {
        return const_cast<Slot*>(static_cast<const NodeRuntime*>(this)->find(f));
    }

    NodeId id_;
    std::uint32_t round_ = 1;
    Opinion opinion_;
    NodeState state_ = NodeState::deciding;
    DecisionKind decision_ = DecisionKind::confused;
    std::vector<Slot> slots_;
    double last_rule_ms_ = 0.0;
    std::uint32_t violations_ = 0;
    std::uint32_t degenerate_firings_ = 0;
};

}  // namespace sky
