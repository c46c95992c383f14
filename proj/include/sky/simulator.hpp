#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sky/graph.hpp"
#include "sky/protocol.hpp"

namespace sky {

// Per-message delivery delay: Gaussian with a hard lower cutoff, no upper
// bound (late messages are delayed, never lost).
struct LatencyModel {
    double mu = 500.0;
    double sigma = 500.0;
    double lower_cutoff = 50.0;
};

inline double sample_latency(const LatencyModel& m, Rng& rng) {
    const double v = rng.gaussian(m.mu, m.sigma);
    return v < m.lower_cutoff ? m.lower_cutoff : v;
}

enum class AdversaryKind : std::uint8_t {
    none,
    always_one,
    always_zero,
    silent,
    random_opinion,
    split_half,
    inverted,
};

inline std::string_view adversary_name(AdversaryKind k) {
    switch (k) {
        case AdversaryKind::none: return "none";
        case AdversaryKind::always_one: return "always-one";
        case AdversaryKind::always_zero: return "always-zero";
        case AdversaryKind::silent: return "silent";
        case AdversaryKind::random_opinion: return "random-opinion";
        case AdversaryKind::split_half: return "split-half";
        case AdversaryKind::inverted: return "inverted";
    }
    return "?";
}

inline AdversaryKind parse_adversary(std::string_view name) {
    if (name == "none") return AdversaryKind::none;
    if (name == "always-one") return AdversaryKind::always_one;
    if (name == "always-zero") return AdversaryKind::always_zero;
    if (name == "silent") return AdversaryKind::silent;
    if (name == "random-opinion") return AdversaryKind::random_opinion;
    if (name == "split-half") return AdversaryKind::split_half;
    if (name == "inverted") return AdversaryKind::inverted;
    throw std::invalid_argument("unknown adversary: " + std::string(name));
}

enum class SelectionMode : std::uint8_t { random_fraction, top_influential, explicit_set };

// The faulty set is fixed at run start; behavior is centrally scripted, so
// faulty nodes may collude.
struct AdversaryStrategy {
    AdversaryKind kind = AdversaryKind::none;
    SelectionMode selection = SelectionMode::random_fraction;
    double fraction = 0.0;
    std::vector<NodeId> explicit_faulty;
};

struct InitialConfiguration {
    double target_signed_cvg = 0.0;
    std::vector<Opinion> explicit_opinions;  // indexed by node id; empty = derive from target
};

struct NodeOutcome {
    NodeId id = 0;
    Opinion opinion = Opinion::zero;
    NodeState state = NodeState::deciding;
    DecisionKind decision = DecisionKind::confused;
    std::uint32_t round = 1;
    double decided_at_ms = -1.0;  // < 0: never decided
};

struct RunResult {
    std::vector<NodeOutcome> outcomes;  // correct nodes, ascending id
    std::uint32_t rounds_to_consensus = 0;  // sync mode; max_rounds+1 = failure sentinel
    double end_time_ms = 0.0;
    std::size_t d0 = 0, d1 = 0, confused = 0, undecided = 0;
    std::size_t final_c0 = 0, final_c1 = 0;
    std::size_t correct_count = 0;
    double initial_signed_cvg = 0.0;
    bool complete = true;
    std::size_t protocol_violations = 0;
    std::size_t degenerate_firings = 0;
    std::vector<std::pair<double, double>> cvg_series;  // (time_ms, signed cvg)
    std::vector<std::string> trace;
};

namespace detail {

// ceil(n*(1+cvg)/2) nodes get opinion 0, chosen uniformly per seed.
inline std::vector<Opinion> assign_opinions(const std::vector<NodeId>& nodes, double target_cvg,
                                            std::uint64_t seed) {
    const std::size_t n = nodes.size();
    const std::size_t zeros = std::min(
        n, static_cast<std::size_t>(std::ceil(n * (1.0 + target_cvg) / 2.0 - 1e-9)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = stream_rng(seed, rng_domain::init_opinions);
    for (std::size_t i = 0; i < zeros && n > 0; ++i) {
        const std::size_t j = i + rng.below(n - i);
        std::swap(order[i], order[j]);
    }
    std::vector<Opinion> out(n, Opinion::one);
    for (std::size_t i = 0; i < zeros; ++i) out[order[i]] = Opinion::zero;
    return out;
}

inline const char* state_tag(NodeState s) {
    switch (s) {
        case NodeState::deciding: return "deciding";
        case NodeState::decided: return "decided";
        case NodeState::confused: return "confused";
    }
    return "?";
}

}  // namespace detail

// Synchronous engine: every node updates simultaneously each round from its
// own opinion plus all followees' current opinions (no filter, no detector).
// Returns the round at which unanimity was first observed, or max_rounds+1.
inline RunResult run_sync(const TrustGraph& g, ModelKind model, const InitialConfiguration& init,
                          std::uint32_t max_rounds, std::uint64_t seed,
                          double sky_mr_ratio = 0.5) {
    const std::size_t n = g.node_count();
    if (n == 0) throw std::invalid_argument("run_sync: empty graph");

    std::vector<Opinion> opinions;
    if (!init.explicit_opinions.empty()) {
        if (init.explicit_opinions.size() != n)
            throw std::invalid_argument("run_sync: explicit opinions size mismatch");
        opinions = init.explicit_opinions;
    } else {
        std::vector<NodeId> all(n);
        std::iota(all.begin(), all.end(), 0);
        opinions = detail::assign_opinions(all, init.target_signed_cvg, seed);
    }

    std::vector<Rng> node_rng;
    node_rng.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        node_rng.push_back(stream_rng(seed, rng_domain::node_rule, i));

    RunResult result;
    result.correct_count = n;
    {
        std::size_t z = 0;
        for (Opinion o : opinions) z += o == Opinion::zero;
        result.initial_signed_cvg =
            (static_cast<double>(z) - static_cast<double>(n - z)) / static_cast<double>(n);
    }

    std::vector<Opinion> next(n);
    std::vector<Opinion> followee_ops;
    result.rounds_to_consensus = max_rounds + 1;
    for (std::uint32_t round = 1; round <= max_rounds; ++round) {
        std::size_t zeros = 0;
        for (Opinion o : opinions) zeros += o == Opinion::zero;
        if (zeros == 0 || zeros == n) {
            result.rounds_to_consensus = round;
            break;
        }
        if (round == max_rounds) break;
        for (std::size_t i = 0; i < n; ++i) {
            const auto followees = g.followees(static_cast<NodeId>(i));
            Rng& rng = node_rng[i];
            if (model == ModelKind::voter || model == ModelKind::sznajd) {
                followee_ops.clear();
                for (NodeId v : followees) followee_ops.push_back(opinions[v]);
                if (model == ModelKind::voter) {
                    next[i] = followee_ops.empty() ? opinions[i] : voter_rule(followee_ops, rng);
                } else {
                    next[i] = followee_ops.size() < 2 ? opinions[i]
                                                      : sznajd_rule(opinions[i], followee_ops, rng);
                }
            } else {
                OpinionCounts c;
                if (opinions[i] == Opinion::zero) ++c.n0;
                else ++c.n1;
                for (NodeId v : followees) {
                    if (opinions[v] == Opinion::zero) ++c.n0;
                    else ++c.n1;
                }
                switch (model) {
                    case ModelKind::mr: next[i] = mr_rule(c, rng); break;
                    case ModelKind::sa: next[i] = sa_rule(c, rng); break;
                    default: next[i] = sky_rule(c, rng, sky_mr_ratio); break;
                }
            }
        }
        opinions.swap(next);
    }

    result.outcomes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        result.final_c0 += opinions[i] == Opinion::zero;
        result.outcomes.push_back(NodeOutcome{static_cast<NodeId>(i), opinions[i],
                                              NodeState::deciding, DecisionKind::confused,
                                              result.rounds_to_consensus, -1.0});
    }
    result.final_c1 = n - result.final_c0;
    result.complete = result.rounds_to_consensus <= max_rounds;
    return result;
}

// Per-tick emissions of the stateless scripted strategies. Ticks stand in
// for rounds: faulty nodes ignore the round protocol, so their messages
// carry round = tick, which always passes the recipients' round filter.
inline std::vector<std::pair<NodeId, Message>> adversary_emit(const AdversaryStrategy& strategy,
                                                              NodeId node, std::uint32_t tick,
                                                              std::span<const NodeId> followers,
                                                              Rng& rng) {
    std::vector<std::pair<NodeId, Message>> out;
    switch (strategy.kind) {
        case AdversaryKind::none:
        case AdversaryKind::silent:
            return out;
        case AdversaryKind::always_one:
        case AdversaryKind::always_zero:
        case AdversaryKind::random_opinion: {
            Opinion o = Opinion::one;
            if (strategy.kind == AdversaryKind::always_zero) o = Opinion::zero;
            if (strategy.kind == AdversaryKind::random_opinion)
                o = rng.coin() ? Opinion::one : Opinion::zero;
            out.reserve(followers.size());
            for (NodeId r : followers)
                out.emplace_back(r, Message{node, tick, o, NodeState::deciding});
            return out;
        }
        case AdversaryKind::split_half: {
            out.reserve(followers.size());
            for (std::size_t i = 0; i < followers.size(); ++i) {
                const Opinion o = (i % 2 == 0) ? Opinion::one : Opinion::zero;
                out.emplace_back(followers[i], Message{node, tick, o, NodeState::deciding});
            }
            return out;
        }
        case AdversaryKind::inverted:
            throw std::invalid_argument("adversary_emit: inverted emissions are stateful");
    }
    return out;
}

struct AsyncOptions {
    ProtocolConfig protocol{};
    LatencyModel latency{};
    double horizon_ms = 300000.0;
    double adversary_period_ms = 1000.0;
    bool record_trace = false;
    double series_sample_ms = 0.0;  // 0 = no convergence time series
};

// Asynchronous discrete-event engine. Event order is a deterministic
// function of (graph, options, seed): ties resolve by (time, kind, node,
// peer, per-edge sequence), and every random draw comes from a stream keyed
// by its owner (node, edge, or faulty node), never from a shared pool.
class AsyncEngine {
  public:
    AsyncEngine(const TrustGraph& g, const AsyncOptions& opts, const AdversaryStrategy& adversary,
                const InitialConfiguration& init, std::uint64_t seed)
        : graph_(g), opts_(opts), strategy_(adversary), seed_(seed) {
        if (opts.protocol.max_rounds < 1)
            throw std::invalid_argument("run_async: max_rounds must be >= 1");
        if (!(opts.protocol.timeout_ms > 0) || !(opts.horizon_ms > 0) ||
            !(opts.adversary_period_ms > 0))
            throw std::invalid_argument("run_async: timeout, horizon and period must be > 0");
        const std::size_t n = g.node_count();
        faulty_.assign(n, false);
        if (adversary.kind != AdversaryKind::none) {
            switch (adversary.selection) {
                case SelectionMode::random_fraction:
                    for (NodeId v : random_selection(g, adversary.fraction, seed)) faulty_[v] = true;
                    break;
                case SelectionMode::top_influential:
                    for (NodeId v : top_influential(g, adversary.fraction)) faulty_[v] = true;
                    break;
                case SelectionMode::explicit_set:
                    for (NodeId v : adversary.explicit_faulty) faulty_.at(v) = true;
                    break;
            }
        }

        for (NodeId v = 0; v < n; ++v)
            (faulty_[v] ? faulty_ids_ : correct_ids_).push_back(v);

        std::vector<Opinion> opinions;
        if (!init.explicit_opinions.empty()) {
            if (init.explicit_opinions.size() != n)
                throw std::invalid_argument("run_async: explicit opinions size mismatch");
            opinions.reserve(correct_ids_.size());
            for (NodeId v : correct_ids_) opinions.push_back(init.explicit_opinions[v]);
        } else {
            opinions = detail::assign_opinions(correct_ids_, init.target_signed_cvg, seed);
        }

        nodes_.reserve(n);
        rule_rng_.reserve(n);
        for (NodeId v = 0; v < n; ++v) {
            nodes_.emplace_back(v, Opinion::zero, g.followees(v), 0.0);
            rule_rng_.push_back(stream_rng(seed, rng_domain::node_rule, v));
        }
        for (std::size_t i = 0; i < correct_ids_.size(); ++i) {
            const NodeId v = correct_ids_[i];
            nodes_[v] = NodeRuntime(v, opinions[i], g.followees(v), 0.0);
            current_c0_ += opinions[i] == Opinion::zero;
        }
        if (adversary.kind == AdversaryKind::inverted) {
            inverted_opinion_.assign(n, Opinion::zero);
            inverted_buffer_.assign(n, {});
        }
    }

    RunResult run() {
        RunResult result;
        result.correct_count = correct_ids_.size();
        const std::size_t n_correct = correct_ids_.size();
        result.initial_signed_cvg =
            n_correct == 0 ? 0.0
                           : (2.0 * static_cast<double>(current_c0_) - static_cast<double>(n_correct)) /
                                 static_cast<double>(n_correct);

        // Round 1 broadcasts and the first detector timeouts.
        for (NodeId v : correct_ids_) {
            broadcast(Message{v, 1, nodes_[v].opinion(), NodeState::deciding}, 0.0);
            push(Event{opts_.protocol.timeout_ms, kTimeout, v, 0, 0});
        }
        if (strategy_.kind != AdversaryKind::none && !faulty_ids_.empty())
            push(Event{0.0, kAdversaryTick, 0, 0, 1});

        double now = 0.0;
        double next_sample = opts_.series_sample_ms;
        if (opts_.series_sample_ms > 0) record_sample(result, 0.0);
        while (!queue_.empty() && decided_ < n_correct) {
            const Event ev = queue_.top();
            if (ev.time > opts_.horizon_ms) break;
            queue_.pop();
            now = ev.time;
            if (opts_.series_sample_ms > 0 && now >= next_sample) {
                record_sample(result, now);
                while (next_sample <= now) next_sample += opts_.series_sample_ms;
            }
            switch (ev.kind) {
                case kDelivery: handle_delivery(ev, result); break;
                case kTimeout: handle_timeout(ev, result); break;
                case kAdversaryTick: handle_tick(ev); break;
                default: break;
            }
        }

        result.end_time_ms = now;
        for (NodeId v : correct_ids_) {
            const NodeRuntime& node = nodes_[v];
            NodeOutcome o;
            o.id = v;
            o.opinion = node.opinion();
            o.state = node.state();
            o.decision = node.decision();
            o.round = node.round();
            o.decided_at_ms = decide_time_.count(v) ? decide_time_.at(v) : -1.0;
            result.outcomes.push_back(o);
            result.final_c0 += node.opinion() == Opinion::zero;
            result.protocol_violations += node.violations();
            result.degenerate_firings += node.degenerate_firings();
            switch (node.state()) {
                case NodeState::deciding: ++result.undecided; break;
                case NodeState::confused: ++result.confused; break;
                case NodeState::decided:
                    if (node.opinion() == Opinion::zero) ++result.d0;
                    else ++result.d1;
                    break;
            }
        }
        result.final_c1 = n_correct - result.final_c0;
        result.complete = result.undecided == 0;
        if (opts_.series_sample_ms > 0) record_sample(result, now);
        return result;
    }

  private:
    static constexpr std::uint8_t kDelivery = 0;
    static constexpr std::uint8_t kTimeout = 1;
    static constexpr std::uint8_t kAdversaryTick = 2;

    struct Event {
        double time;
        std::uint8_t kind;
        NodeId a;  // delivery: receiver; timeout: node
        NodeId b;  // delivery: sender
        std::uint64_t seq;
        Message msg{};
    };
    struct EventAfter {
        bool operator()(const Event& x, const Event& y) const {
            if (x.time != y.time) return x.time > y.time;
            if (x.kind != y.kind) return x.kind > y.kind;
            if (x.a != y.a) return x.a > y.a;
            if (x.b != y.b) return x.b > y.b;
            return x.seq > y.seq;
        }
    };

    void push(Event ev) { queue_.push(ev); }

    static std::uint64_t edge_key(NodeId from, NodeId to) {
        return (static_cast<std::uint64_t>(from) << 32) | to;
    }

    // Latency draws are counter-based per directed edge, so a run's draws on
    // one edge never depend on traffic elsewhere in the network.
    double next_latency(NodeId from, NodeId to, std::uint32_t& index_out) {
        const std::uint64_t key = edge_key(from, to);
        std::uint32_t& counter = edge_counter_[key];
        index_out = counter++;
        const std::uint64_t stream = stream_seed(seed_, rng_domain::edge_latency, key);
        double v = counter_gaussian(stream, index_out, opts_.latency.mu, opts_.latency.sigma);
        if (v < opts_.latency.lower_cutoff) v = opts_.latency.lower_cutoff;
        return v;
    }

    void broadcast(const Message& msg, double now) {
        for (NodeId follower : graph_.followers(msg.sender)) {
            if (faulty_[follower] && strategy_.kind != AdversaryKind::inverted)
                continue;  // scripted nodes ignore incoming traffic
            std::uint32_t idx = 0;
            const double latency = next_latency(msg.sender, follower, idx);
            push(Event{now + latency, kDelivery, follower, msg.sender, idx, msg});
        }
    }

    void trace(RunResult& result, double t, NodeId node, const char* kind, std::uint32_t round,
               Opinion opinion, NodeState state) {
        if (!opts_.record_trace) return;
        char line[160];
        std::snprintf(line, sizeof(line), "(%.6f, %u, %s, %u, %u, %s)", t, node, kind, round,
                      static_cast<unsigned>(opinion), detail::state_tag(state));
        result.trace.emplace_back(line);
    }

    void drain_rules(NodeId v, double now, RunResult& result) {
        NodeRuntime& node = nodes_[v];
        while (auto msg = node.try_apply_rule(opts_.protocol, rule_rng_[v])) {
            node.note_rule_time(now);
            broadcast(*msg, now);
            if (msg->state == NodeState::deciding) {
                trace(result, now, v, "round", msg->round, msg->opinion, msg->state);
            } else {
                ++decided_;
                decide_time_[v] = now;
                trace(result, now, v, "decide", msg->round, msg->opinion, msg->state);
            }
        }
    }

    void handle_delivery(const Event& ev, RunResult& result) {
        if (faulty_[ev.a]) {
            if (strategy_.kind == AdversaryKind::inverted) {
                auto& buf = inverted_buffer_[ev.a];
                buf[ev.msg.sender] = ev.msg.opinion;
            }
            return;
        }
        NodeRuntime& node = nodes_[ev.a];
        const Opinion before = node.opinion();
        const auto res = node.handle_message(ev.msg, ev.time);
        if (res == NodeRuntime::HandleResult::accepted)
            trace(result, ev.time, ev.a, "deliver", ev.msg.round, ev.msg.opinion, ev.msg.state);
        drain_rules(ev.a, ev.time, result);
        update_c0(before, node.opinion());
    }

    void handle_timeout(const Event& ev, RunResult& result) {
        NodeRuntime& node = nodes_[ev.a];
        if (node.state() != NodeState::deciding) return;
        const double due = node.last_rule_ms() + opts_.protocol.timeout_ms;
        if (ev.time < due) {
            push(Event{due, kTimeout, ev.a, 0, 0});
            return;
        }
        const Opinion before = node.opinion();
        const std::size_t suspected = node.on_timeout(ev.time, opts_.protocol.timeout_ms);
        if (suspected > 0)
            trace(result, ev.time, ev.a, "suspect", node.round(), node.opinion(), node.state());
        drain_rules(ev.a, ev.time, result);
        update_c0(before, node.opinion());
        if (node.state() == NodeState::deciding)
            push(Event{std::max(ev.time, node.last_rule_ms()) + opts_.protocol.timeout_ms,
                       kTimeout, ev.a, 0, 0});
    }

    void handle_tick(const Event& ev) {
        const std::uint32_t tick = static_cast<std::uint32_t>(ev.seq);
        for (NodeId v : faulty_ids_) {
            if (strategy_.kind == AdversaryKind::inverted) {
                emit_inverted(v, tick, ev.time);
                continue;
            }
            Rng rng = stream_rng(seed_, rng_domain::adversary,
                                 (static_cast<std::uint64_t>(tick) << 32) ^ v);
            for (auto& [recipient, msg] : adversary_emit(strategy_, v, tick, graph_.followers(v), rng)) {
                if (faulty_[recipient]) continue;
                std::uint32_t idx = 0;
                const double latency = next_latency(v, recipient, idx);
                push(Event{ev.time + latency, kDelivery, recipient, v, idx, msg});
            }
        }
        const double next = ev.time + opts_.adversary_period_ms;
        if (next <= opts_.horizon_ms) push(Event{next, kAdversaryTick, 0, 0, ev.seq + 1});
    }

    // An inverted faulty node runs the common rule over what it heard and
    // broadcasts the negation of what it should have said.
    void emit_inverted(NodeId v, std::uint32_t tick, double now) {
        OpinionCounts counts;
        if (inverted_opinion_[v] == Opinion::zero) ++counts.n0;
        else ++counts.n1;
        for (const auto& [sender, opinion] : inverted_buffer_[v]) {
            if (opinion == Opinion::zero) ++counts.n0;
            else ++counts.n1;
        }
        Rng rng = stream_rng(seed_, rng_domain::adversary,
                             (static_cast<std::uint64_t>(tick) << 32) ^ v);
        Opinion honest;
        switch (opts_.protocol.model) {
            case ModelKind::mr: honest = mr_rule(counts, rng); break;
            case ModelKind::sa: honest = sa_rule(counts, rng); break;
            default: honest = sky_rule(counts, rng, opts_.protocol.sky_mr_ratio); break;
        }
        inverted_opinion_[v] = honest;
        const Message msg{v, tick, opposite(honest), NodeState::deciding};
        for (NodeId follower : graph_.followers(v)) {
            if (faulty_[follower]) {
                inverted_buffer_[follower][v] = msg.opinion;
                continue;
            }
            std::uint32_t idx = 0;
            const double latency = next_latency(v, follower, idx);
            push(Event{now + latency, kDelivery, follower, v, idx, msg});
        }
    }

    void update_c0(Opinion before, Opinion after) {
        if (before == after) return;
        if (after == Opinion::zero) ++current_c0_;
        else --current_c0_;
    }

    void record_sample(RunResult& result, double t) {
        const std::size_t n = correct_ids_.size();
        if (n == 0) return;
        const double cvg =
            (2.0 * static_cast<double>(current_c0_) - static_cast<double>(n)) / static_cast<double>(n);
        if (!result.cvg_series.empty() && result.cvg_series.back().first == t) return;
        result.cvg_series.emplace_back(t, cvg);
    }

    const TrustGraph& graph_;
    AsyncOptions opts_;
    AdversaryStrategy strategy_;
    std::uint64_t seed_;

    std::vector<bool> faulty_;
    std::vector<NodeId> correct_ids_;
    std::vector<NodeId> faulty_ids_;
    std::vector<NodeRuntime> nodes_;
    std::vector<Rng> rule_rng_;
    std::vector<Opinion> inverted_opinion_;
    std::vector<std::unordered_map<NodeId, Opinion>> inverted_buffer_;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_counter_;
    std::unordered_map<NodeId, double> decide_time_;
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    std::size_t decided_ = 0;
    std::size_t current_c0_ = 0;
};

inline RunResult run_async(const TrustGraph& g, const AsyncOptions& opts,
                           const AdversaryStrategy& adversary, const InitialConfiguration& init,
                           std::uint64_t seed) {
    AsyncEngine engine(g, opts, adversary, init, seed);
    return engine.run();
}

}  // namespace sky
