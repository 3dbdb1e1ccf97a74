#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <tuple>
#include <vector>

#include "causalcast/common.hpp"

#include <json.hpp>

namespace causalcast {

enum class EndMark { tail, arrow, circle };
enum class MiddleMark { unconfirmed, confirmed };

inline const char* to_string(EndMark m) {
    switch (m) {
        case EndMark::tail: return "tail";
        case EndMark::arrow: return "arrow";
        default: return "circle";
    }
}

/// A (variable, lag) pair; lag 0 is the present slice, lag k the node k steps
/// in the past.
struct GraphNode {
    int var = 0;
    int lag = 0;

    friend bool operator==(const GraphNode& a, const GraphNode& b) {
        return a.var == b.var && a.lag == b.lag;
    }
    friend bool operator<(const GraphNode& a, const GraphNode& b) {
        return std::tie(a.var, a.lag) < std::tie(b.var, b.lag);
    }
};

struct GraphEdge {
    GraphNode src;
    GraphNode dst; // always at lag 0
    EndMark mark_src = EndMark::circle;
    EndMark mark_dst = EndMark::circle;
    MiddleMark middle_mark = MiddleMark::unconfirmed;
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Lag-resolved PAG over (variable, lag) nodes.
struct LaggedGraph {
    std::vector<std::string> var_names;
    int tau_max = 0;
    double alpha = 0.0;
    std::string mode; // "pcmci" or "lpcmci-lite"
    std::vector<GraphEdge> edges;

    std::string node_name(const GraphNode& n) const {
        if (n.lag == 0) return var_names[static_cast<std::size_t>(n.var)] + "(t)";
        return var_names[static_cast<std::size_t>(n.var)] + "(t-" + std::to_string(n.lag) + ")";
    }

    bool finalized() const {
        return std::all_of(edges.begin(), edges.end(),
                           [](const GraphEdge& e) { return e.middle_mark == MiddleMark::confirmed; });
    }

    void sort_edges() {
        std::sort(edges.begin(), edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
            return std::tie(a.dst.var, a.src.var, a.src.lag) < std::tie(b.dst.var, b.src.var, b.src.lag);
        });
    }

    void validate() const {
        for (const auto& e : edges) {
            if (e.dst.lag != 0) throw ConfigError("graph edge target must be at lag 0");
            if (e.src.lag < 0 || e.src.lag > tau_max) throw ConfigError("graph edge source lag out of range");
            if (e.src.lag >= 1 && e.mark_dst != EndMark::arrow) {
                throw ConfigError("lagged edge must carry an arrow at the present-time end");
            }
            if (e.src.lag == 0 && e.src.var == e.dst.var) {
                throw ConfigError("self-edge at lag 0 is not allowed");
            }
        }
    }
};

namespace detail {

inline std::string format_pval(double p) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", p);
    return buf;
}

} // namespace detail

enum class GraphFormat { json, dot };

/// Deterministic serialization of a finalized graph. JSON round-trips through
/// from_graph_json; DOT maps end marks to arrowhead styles
/// (tail -> none, arrow -> normal, circle -> odot).
inline std::string export_graph(const LaggedGraph& graph, GraphFormat format) {
    if (!graph.finalized()) {
        throw ConfigError("cannot export a graph with unconfirmed middle marks");
    }
    LaggedGraph g = graph;
    g.sort_edges();

    if (format == GraphFormat::json) {
        nlohmann::json j;
        j["mode"] = g.mode;
        j["tau_max"] = g.tau_max;
        j["alpha"] = g.alpha;
        j["nodes"] = nlohmann::json::array();
        for (int v = 0; v < static_cast<int>(g.var_names.size()); ++v) {
            for (int lag = 0; lag <= g.tau_max; ++lag) {
                j["nodes"].push_back({{"var", g.var_names[static_cast<std::size_t>(v)]}, {"lag", lag}});
            }
        }
        j["edges"] = nlohmann::json::array();
        for (const auto& e : g.edges) {
            j["edges"].push_back({
                {"src", {{"var", g.var_names[static_cast<std::size_t>(e.src.var)]}, {"lag", e.src.lag}}},
                {"dst", {{"var", g.var_names[static_cast<std::size_t>(e.dst.var)]}, {"lag", e.dst.lag}}},
                {"mark_src", to_string(e.mark_src)},
                {"mark_dst", to_string(e.mark_dst)},
                {"stat", e.statistic},
                {"pval", e.p_value},
            });
        }
        return j.dump(2) + "\n";
    }

    const auto dot_mark = [](EndMark m) {
        switch (m) {
            case EndMark::tail: return "none";
            case EndMark::arrow: return "normal";
            default: return "odot";
        }
    };
    std::string out = "digraph lagged {\n  rankdir=LR;\n";
    for (int v = 0; v < static_cast<int>(g.var_names.size()); ++v) {
        for (int lag = g.tau_max; lag >= 0; --lag) {
            out += "  \"" + g.node_name({v, lag}) + "\";\n";
        }
    }
    for (const auto& e : g.edges) {
        out += "  \"" + g.node_name(e.src) + "\" -> \"" + g.node_name(e.dst) + "\" [dir=both, arrowtail=" +
               dot_mark(e.mark_src) + ", arrowhead=" + dot_mark(e.mark_dst) +
               ", label=\"p=" + detail::format_pval(e.p_value) + "\"];\n";
    }
    out += "}\n";
    return out;
}

/// Parses the JSON produced by export_graph.
inline LaggedGraph graph_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    LaggedGraph g;
    g.mode = j.at("mode").get<std::string>();
    g.tau_max = j.at("tau_max").get<int>();
    g.alpha = j.at("alpha").get<double>();
    for (const auto& jn : j.at("nodes")) {
        if (jn.at("lag").get<int>() == 0) {
            g.var_names.push_back(jn.at("var").get<std::string>());
        }
    }
    const auto var_index = [&](const std::string& name) {
        const auto it = std::find(g.var_names.begin(), g.var_names.end(), name);
        if (it == g.var_names.end()) throw DataError("graph JSON references unknown variable '" + name + "'");
        return static_cast<int>(it - g.var_names.begin());
    };
    const auto parse_mark = [](const std::string& s) {
        if (s == "tail") return EndMark::tail;
        if (s == "arrow") return EndMark::arrow;
        if (s == "circle") return EndMark::circle;
        throw DataError("graph JSON has unknown end mark '" + s + "'");
    };
    for (const auto& je : j.at("edges")) {
        GraphEdge e;
        e.src = {var_index(je.at("src").at("var").get<std::string>()), je.at("src").at("lag").get<int>()};
        e.dst = {var_index(je.at("dst").at("var").get<std::string>()), je.at("dst").at("lag").get<int>()};
        e.mark_src = parse_mark(je.at("mark_src").get<std::string>());
        e.mark_dst = parse_mark(je.at("mark_dst").get<std::string>());
        e.middle_mark = MiddleMark::confirmed;
        e.statistic = je.at("stat").get<double>();
        e.p_value = je.at("pval").get<double>();
        g.edges.push_back(e);
    }
    g.validate();
    return g;
}

} // namespace causalcast
