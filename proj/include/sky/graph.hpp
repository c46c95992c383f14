#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <charconv>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sky/random.hpp"

namespace sky {

using NodeId = std::uint32_t;

class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

struct GraphStats {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    double average_degree = 0.0;  // mean followee count
    double density = 0.0;         // edge_count / (n * (n - 1))
};

// Directed trust graph: edge u -> v means "u follows v". Immutable after
// construction; followers is maintained as the exact inverse of followees.
class TrustGraph {
  public:
    TrustGraph() = default;

    // Builds from (follower, followee) pairs over dense ids < n.
    // Self-loops and duplicates are dropped; adjacency is stored sorted.
    static TrustGraph from_edges(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges,
                                 std::vector<std::uint64_t> original_ids = {}) {
        TrustGraph g;
        g.followees_.assign(n, {});
        g.followers_.assign(n, {});
        if (original_ids.empty()) {
            g.original_ids_.resize(n);
            std::iota(g.original_ids_.begin(), g.original_ids_.end(), 0);
        } else {
            if (original_ids.size() != n)
                throw std::invalid_argument("from_edges: original id map size mismatch");
            g.original_ids_ = std::move(original_ids);
        }
        for (const auto& [u, v] : edges) {
            if (u >= n || v >= n) throw std::invalid_argument("from_edges: node id out of range");
            if (u == v) continue;
            g.followees_[u].push_back(v);
        }
        g.edge_count_ = 0;
        for (std::size_t u = 0; u < n; ++u) {
            auto& list = g.followees_[u];
            std::sort(list.begin(), list.end());
            list.erase(std::unique(list.begin(), list.end()), list.end());
            g.edge_count_ += list.size();
            for (NodeId v : list) g.followers_[v].push_back(static_cast<NodeId>(u));
        }
        for (auto& list : g.followers_) std::sort(list.begin(), list.end());
        return g;
    }

    std::size_t node_count() const { return followees_.size(); }
    std::size_t edge_count() const { return edge_count_; }

    std::span<const NodeId> followees(NodeId u) const { return followees_[u]; }
    std::span<const NodeId> followers(NodeId v) const { return followers_[v]; }

    std::uint64_t original_id(NodeId u) const { return original_ids_[u]; }

    GraphStats stats() const {
        GraphStats s;
        s.node_count = node_count();
        s.edge_count = edge_count_;
        if (s.node_count > 0) s.average_degree = static_cast<double>(edge_count_) / s.node_count;
        if (s.node_count > 1)
            s.density = static_cast<double>(edge_count_) /
                        (static_cast<double>(s.node_count) * (s.node_count - 1));
        return s;
    }

  private:
    std::vector<std::vector<NodeId>> followees_;
    std::vector<std::vector<NodeId>> followers_;
    std::vector<std::uint64_t> original_ids_;
    std::size_t edge_count_ = 0;
};

struct ParseReport {
    TrustGraph graph;
    std::size_t duplicate_edges = 0;
    std::size_t self_loops = 0;
};

// Parses a SNAP-style edge list: '#' comment lines, otherwise two
// whitespace-separated integer ids per line ("u v" = u follows v).
// Ids are remapped to dense 0..n-1 in ascending original-id order.
inline ParseReport parse_edge_list(std::string_view text) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) continue;
        if (line[b] == '#') continue;
        std::uint64_t ids[2];
        const char* cur = line.data() + b;
        const char* end = line.data() + line.size();
        for (int i = 0; i < 2; ++i) {
            while (cur < end && (*cur == ' ' || *cur == '\t' || *cur == '\r')) ++cur;
            auto [next, ec] = std::from_chars(cur, end, ids[i]);
            if (ec != std::errc() || next == cur)
                throw ParseError(line_no, "expected integer id");
            cur = next;
        }
        while (cur < end && (*cur == ' ' || *cur == '\t' || *cur == '\r')) ++cur;
        if (cur != end) throw ParseError(line_no, "trailing characters after edge");
        raw.emplace_back(ids[0], ids[1]);
    }

    std::vector<std::uint64_t> ids;
    ids.reserve(raw.size() * 2);
    for (const auto& [u, v] : raw) {
        ids.push_back(u);
        ids.push_back(v);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::unordered_map<std::uint64_t, NodeId> dense;
    dense.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) dense[ids[i]] = static_cast<NodeId>(i);

    ParseReport report;
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(raw.size());
    for (const auto& [u, v] : raw) {
        if (u == v) {
            ++report.self_loops;
            continue;
        }
        edges.emplace_back(dense[u], dense[v]);
    }
    std::sort(edges.begin(), edges.end());
    const auto uniq = std::unique(edges.begin(), edges.end());
    report.duplicate_edges = static_cast<std::size_t>(edges.end() - uniq);
    edges.erase(uniq, edges.end());
    const std::size_t node_count = ids.size();
    report.graph = TrustGraph::from_edges(node_count, std::move(edges), std::move(ids));
    return report;
}

struct FilterResult {
    TrustGraph graph;
    bool annihilated = false;
    std::size_t removed_nodes = 0;
    std::size_t passes = 0;
};

// Repeatedly removes nodes whose followee count (within the surviving
// subgraph) is below `min_followees`, until a fixed point. Survivors are
// re-indexed densely; an empty result is reported, not thrown.
inline FilterResult enforce_min_followees(const TrustGraph& g, std::size_t min_followees) {
    const std::size_t n = g.node_count();
    std::vector<bool> alive(n, true);
    std::vector<std::size_t> degree(n);
    for (std::size_t u = 0; u < n; ++u) degree[u] = g.followees(static_cast<NodeId>(u)).size();

    FilterResult result;
    bool changed = true;
    while (changed) {
        changed = false;
        ++result.passes;
        std::vector<NodeId> doomed;
        for (std::size_t u = 0; u < n; ++u)
            if (alive[u] && degree[u] < min_followees) doomed.push_back(static_cast<NodeId>(u));
        if (doomed.empty()) break;
        changed = true;
        result.removed_nodes += doomed.size();
        for (NodeId u : doomed) {
            alive[u] = false;
            for (NodeId w : g.followers(u))
                if (alive[w]) --degree[w];
        }
    }

    std::vector<NodeId> remap(n, 0);
    std::vector<std::uint64_t> originals;
    NodeId next = 0;
    for (std::size_t u = 0; u < n; ++u) {
        if (!alive[u]) continue;
        remap[u] = next++;
        originals.push_back(g.original_id(static_cast<NodeId>(u)));
    }
    if (next == 0) {
        result.annihilated = true;
        result.graph = TrustGraph();
        return result;
    }
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t u = 0; u < n; ++u) {
        if (!alive[u]) continue;
        for (NodeId v : g.followees(static_cast<NodeId>(u)))
            if (alive[v]) edges.emplace_back(remap[u], remap[v]);
    }
    result.graph = TrustGraph::from_edges(next, std::move(edges), std::move(originals));
    return result;
}

// Every node follows exactly `degree` distinct others, chosen uniformly.
inline TrustGraph generate_uniform(std::size_t n, std::size_t degree, std::uint64_t seed) {
    if (degree == 0 || degree >= n)
        throw std::invalid_argument("generate_uniform: need 0 < degree < n");
    Rng rng = stream_rng(seed, rng_domain::graph_gen);
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(n * degree);
    std::vector<NodeId> picked;
    picked.reserve(degree);
    for (std::size_t u = 0; u < n; ++u) {
        picked.clear();
        while (picked.size() < degree) {
            const NodeId v = static_cast<NodeId>(rng.below(n));
            if (v == u) continue;
            if (std::find(picked.begin(), picked.end(), v) != picked.end()) continue;
            picked.push_back(v);
        }
        for (NodeId v : picked) edges.emplace_back(static_cast<NodeId>(u), v);
    }
    return TrustGraph::from_edges(n, std::move(edges));
}

inline std::size_t scaled_count_ceil(double fraction, std::size_t n) {
    // tiny slack so fraction*n that is mathematically integral never rounds up
    return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

// First ceil(fraction*n) nodes by descending follower count, ties by
// ascending id.
inline std::vector<NodeId> top_influential(const TrustGraph& g, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw std::invalid_argument("top_influential: fraction must be in [0,1]");
    const std::size_t n = g.node_count();
    std::size_t count = scaled_count_ceil(fraction, n);
    if (count > n) count = n;
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        const std::size_t fa = g.followers(a).size();
        const std::size_t fb = g.followers(b).size();
        if (fa != fb) return fa > fb;
        return a < b;
    });
    order.resize(count);
    return order;
}

// Uniform subset of size round(fraction*n), deterministic per seed.
inline std::vector<NodeId> random_selection(const TrustGraph& g, double fraction,
                                            std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw std::invalid_argument("random_selection: fraction must be in [0,1]");
    const std::size_t n = g.node_count();
    std::size_t count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (count > n) count = n;
    std::vector<NodeId> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    Rng rng = stream_rng(seed, rng_domain::selection);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.below(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

// Canonical serialization: original ids, one edge per line, sorted.
inline std::string to_edge_list(const TrustGraph& g) {
    std::string out;
    out += "# nodes " + std::to_string(g.node_count()) + "\n";
    out += "# edges " + std::to_string(g.edge_count()) + "\n";
    for (NodeId u = 0; u < g.node_count(); ++u)
        for (NodeId v : g.followees(u)) {
            out += std::to_string(g.original_id(u));
            out += '\t';
            out += std::to_string(g.original_id(v));
            out += '\n';
        }
    return out;
}

}  // namespace sky
