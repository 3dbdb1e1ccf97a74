#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "causalcast/citest.hpp"
#include "causalcast/common.hpp"
#include "causalcast/graph.hpp"
#include "causalcast/panel.hpp"

namespace causalcast {

enum class CiTestKind { parcorr, gpdc };
enum class DiscoveryMode { pcmci, lpcmci };

struct DiscoveryConfig {
    int tau_max = 4;
    double alpha_pc = 0.2;  // PC1 keeps parents liberally; MCI controls false positives
    double alpha_mci = 0.05;
    CiTestKind ci_test = CiTestKind::parcorr;
    std::optional<int> max_cond_dim;
    DiscoveryMode mode = DiscoveryMode::pcmci;
    std::uint64_t seed = 0;
    int n_perm = 199;
    int n_threads = 1;
    GpGrid gp_grid;

    void validate() const {
        if (tau_max < 1) throw ConfigError("tau_max must be >= 1");
        if (alpha_pc <= 0.0 || alpha_pc >= 1.0) throw ConfigError("alpha_pc must lie in (0, 1)");
        if (alpha_mci <= 0.0 || alpha_mci >= 1.0) throw ConfigError("alpha_mci must lie in (0, 1)");
    }
};

struct ParentEntry {
    GraphNode node;
    double stat_abs = 0.0;
    double p_value = 1.0;
};

/// Per-variable parent candidates surviving PC1, sorted by descending
/// |statistic| (ties: variable index, then lag).
using ParentSets = std::vector<std::vector<ParentEntry>>;

/// MCI results indexed by (source var, lag, target var). Lag-0 pairs are
/// tested once per unordered pair and mirrored.
struct MciMatrix {
    int n_vars = 0;
    int tau_max = 0;
    std::vector<CITestResult> cells;
    std::vector<std::uint8_t> tested_flags;

    void init(int vars, int lags) {
        n_vars = vars;
        tau_max = lags;
        const std::size_t n = static_cast<std::size_t>(vars) * static_cast<std::size_t>(lags + 1) * vars;
        cells.assign(n, CITestResult{});
        tested_flags.assign(n, 0);
    }
    std::size_t idx(int src, int tau, int dst) const {
        return (static_cast<std::size_t>(src) * static_cast<std::size_t>(tau_max + 1) +
                static_cast<std::size_t>(tau)) *
                   static_cast<std::size_t>(n_vars) +
               static_cast<std::size_t>(dst);
    }
    bool tested(int src, int tau, int dst) const { return tested_flags[idx(src, tau, dst)] != 0; }
    const CITestResult& at(int src, int tau, int dst) const { return cells[idx(src, tau, dst)]; }
    void set(int src, int tau, int dst, const CITestResult& r) {
        cells[idx(src, tau, dst)] = r;
        tested_flags[idx(src, tau, dst)] = 1;
    }
};

namespace detail {

// Time-aligned design over the shared window t in [tau_max, T): every test in
// one discovery run sees the identical sample rows, so lags up to tau_max are
// always addressable.
class LaggedData {
public:
    LaggedData(const TimeSeriesPanel& panel, int tau_max)
        : panel_(&panel), tau_max_(tau_max), t_eff_(static_cast<std::ptrdiff_t>(panel.rows()) - tau_max) {
        if (t_eff_ < 4) throw DataError("not enough rows after lagging: T_eff < 4");
    }

    std::size_t effective_samples() const { return static_cast<std::size_t>(t_eff_); }

    std::vector<double> node_column(const GraphNode& n) const {
        std::vector<double> out(static_cast<std::size_t>(t_eff_));
        for (std::ptrdiff_t r = 0; r < t_eff_; ++r) {
            out[static_cast<std::size_t>(r)] =
                panel_->at(static_cast<std::size_t>(r + tau_max_ - n.lag), static_cast<std::size_t>(n.var));
        }
        return out;
    }

    Eigen::MatrixXd condition_matrix(const std::vector<GraphNode>& z) const {
        Eigen::MatrixXd m(t_eff_, static_cast<Eigen::Index>(z.size()));
        for (std::size_t j = 0; j < z.size(); ++j) {
            const auto col = node_column(z[j]);
            for (std::ptrdiff_t r = 0; r < t_eff_; ++r) {
                m(r, static_cast<Eigen::Index>(j)) = col[static_cast<std::size_t>(r)];
            }
        }
        return m;
    }

private:
    const TimeSeriesPanel* panel_;
    int tau_max_;
    std::ptrdiff_t t_eff_;
};

// Sub-seeds are keyed by variable names and lags, not column positions, so a
// column permutation of the panel reproduces identical test outcomes.
inline std::uint64_t cell_seed(const DiscoveryConfig& cfg, const std::vector<std::string>& names,
                               const GraphNode& x, const GraphNode& y, int sweep, const char* phase) {
    std::uint64_t h = fnv1a(phase);
    h = fnv1a(names[static_cast<std::size_t>(x.var)], h);
    h = fnv1a(&x.lag, sizeof(x.lag), h);
    h = fnv1a(names[static_cast<std::size_t>(y.var)], h);
    h = fnv1a(&y.lag, sizeof(y.lag), h);
    h = fnv1a(&sweep, sizeof(sweep), h);
    return derive_seed(cfg.seed, h);
}

inline CITestResult run_ci(const LaggedData& data, const DiscoveryConfig& cfg,
                           const std::vector<std::string>& names, const GraphNode& x, const GraphNode& y,
                           const std::vector<GraphNode>& z, int sweep, const char* phase) {
    const auto xv = data.node_column(x);
    const auto yv = data.node_column(y);
    const Eigen::MatrixXd zm = z.empty() ? Eigen::MatrixXd() : data.condition_matrix(z);
    const auto t = static_cast<std::ptrdiff_t>(data.effective_samples());
    if (t < static_cast<std::ptrdiff_t>(z.size()) + 4) {
        throw DataError("effective sample too small: T_eff=" + std::to_string(t) + " with D_Z=" +
                        std::to_string(z.size()));
    }
    if (cfg.ci_test == CiTestKind::parcorr) {
        return parcorr_test(xv, yv, zm);
    }
    return gpdc_test(xv, yv, zm, cfg.n_perm, cell_seed(cfg, names, x, y, sweep, phase), cfg.n_threads,
                     cfg.gp_grid);
}

inline bool node_order(const GraphNode& a, const GraphNode& b) {
    return a < b;
}

} // namespace detail

/// PC1 condition selection: iteratively prunes the lagged parent candidates of
/// each variable, conditioning on the p strongest remaining other candidates.
inline ParentSets pc1_select_parents(const TimeSeriesPanel& panel, const DiscoveryConfig& config) {
    config.validate();
    if (panel.any_missing()) throw DataError("discovery requires a fully observed panel");
    if (static_cast<int>(panel.rows()) <= 10 * config.tau_max) {
        throw DataError("need T > 10 * tau_max rows, got T=" + std::to_string(panel.rows()));
    }
    const int n = static_cast<int>(panel.cols());
    const detail::LaggedData data(panel, config.tau_max);
    const int max_p = config.max_cond_dim.value_or(std::numeric_limits<int>::max());

    ParentSets parents(static_cast<std::size_t>(n));
    for (int y = 0; y < n; ++y) {
        struct Cand {
            GraphNode node;
            double stat_abs = 0.0;
            double p_value = 1.0;
        };
        std::vector<Cand> cands;
        for (int x = 0; x < n; ++x) {
            for (int tau = 1; tau <= config.tau_max; ++tau) {
                cands.push_back({{x, tau}, 0.0, 1.0});
            }
        }
        const GraphNode target{y, 0};

        for (int p = 0;; ++p) {
            if (p > max_p) break;
            if (p >= static_cast<int>(cands.size())) break;

            // Ranking from the previous sweep decides conditioning sets.
            std::vector<std::size_t> rank(cands.size());
            std::iota(rank.begin(), rank.end(), std::size_t{0});
            std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
                if (cands[a].stat_abs != cands[b].stat_abs) return cands[a].stat_abs > cands[b].stat_abs;
                return detail::node_order(cands[a].node, cands[b].node);
            });

            std::vector<CITestResult> results(cands.size());
            for (std::size_t c = 0; c < cands.size(); ++c) {
                std::vector<GraphNode> z;
                for (std::size_t r = 0; r < rank.size() && static_cast<int>(z.size()) < p; ++r) {
                    if (rank[r] != c) z.push_back(cands[rank[r]].node);
                }
                results[c] =
                    detail::run_ci(data, config, panel.names, cands[c].node, target, z, p, "pc1");
            }

            std::vector<Cand> kept;
            for (std::size_t c = 0; c < cands.size(); ++c) {
                if (results[c].p_value <= config.alpha_pc) {
                    kept.push_back({cands[c].node, std::fabs(results[c].statistic), results[c].p_value});
                }
            }
            cands = std::move(kept);
            if (cands.empty()) break;
        }

        std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.stat_abs != b.stat_abs) return a.stat_abs > b.stat_abs;
            return detail::node_order(a.node, b.node);
        });
        for (const auto& c : cands) {
            parents[static_cast<std::size_t>(y)].push_back({c.node, c.stat_abs, c.p_value});
        }
    }
    return parents;
}

/// MCI sweep: every (source, lag, target) cell is tested conditional on the
/// target's parents (minus the source) plus the source's parents shifted by
/// the lag. Shifted conditions beyond tau_max fall outside the shared sample
/// window and are dropped.
inline MciMatrix mci_matrix(const TimeSeriesPanel& panel, const ParentSets& parents,
                            const DiscoveryConfig& config) {
    config.validate();
    const int n = static_cast<int>(panel.cols());
    if (static_cast<int>(parents.size()) != n) {
        throw ConfigError("parent sets do not match the panel's variable count");
    }
    const detail::LaggedData data(panel, config.tau_max);

    MciMatrix m;
    m.init(n, config.tau_max);
    for (int dst = 0; dst < n; ++dst) {
        for (int src = 0; src < n; ++src) {
            for (int tau = 0; tau <= config.tau_max; ++tau) {
                if (tau == 0 && src >= dst) continue; // lag-0 handled once per unordered pair
                const GraphNode xs{src, tau};
                const GraphNode yt{dst, 0};

                std::vector<GraphNode> z;
                for (const auto& pe : parents[static_cast<std::size_t>(dst)]) {
                    if (!(pe.node == xs)) z.push_back(pe.node);
                }
                for (const auto& pe : parents[static_cast<std::size_t>(src)]) {
                    const GraphNode shifted{pe.node.var, pe.node.lag + tau};
                    if (shifted.lag > config.tau_max) continue;
                    if (shifted == xs || shifted == yt) continue;
                    if (std::find(z.begin(), z.end(), shifted) == z.end()) z.push_back(shifted);
                }
                std::sort(z.begin(), z.end(), detail::node_order);

                const auto res = detail::run_ci(data, config, panel.names, xs, yt, z, 0, "mci");
                m.set(src, tau, dst, res);
                if (tau == 0) m.set(dst, 0, src, res);
            }
        }
    }
    return m;
}

/// Two-stage PCMCI: PC1 parent selection, then MCI with alpha_mci deciding
/// the reported links. Lagged links are oriented past -> present;
/// contemporaneous links stay circle-circle.
inline LaggedGraph run_pcmci(const TimeSeriesPanel& panel, const DiscoveryConfig& config) {
    config.validate();
    if (config.mode != DiscoveryMode::pcmci) throw ConfigError("run_pcmci requires mode = pcmci");
    const auto parents = pc1_select_parents(panel, config);
    const auto m = mci_matrix(panel, parents, config);

    LaggedGraph g;
    g.var_names = panel.names;
    g.tau_max = config.tau_max;
    g.alpha = config.alpha_mci;
    g.mode = "pcmci";
    const int n = static_cast<int>(panel.cols());
    for (int dst = 0; dst < n; ++dst) {
        for (int src = 0; src < n; ++src) {
            for (int tau = 0; tau <= config.tau_max; ++tau) {
                if (tau == 0 && src >= dst) continue;
                if (!m.tested(src, tau, dst)) continue;
                const auto& res = m.at(src, tau, dst);
                if (res.p_value > config.alpha_mci) continue;
                GraphEdge e;
                e.src = {src, tau};
                e.dst = {dst, 0};
                e.mark_src = (tau >= 1) ? EndMark::tail : EndMark::circle;
                e.mark_dst = (tau >= 1) ? EndMark::arrow : EndMark::circle;
                e.middle_mark = MiddleMark::confirmed;
                e.statistic = res.statistic;
                e.p_value = res.p_value;
                g.edges.push_back(e);
            }
        }
    }
    g.sort_edges();
    g.validate();
    return g;
}

/// The fully connected starting graph of the latent-aware mode: every
/// admissible (pair, lag) combination, all middle marks unconfirmed.
inline LaggedGraph initial_full_graph(const std::vector<std::string>& var_names, int tau_max) {
    LaggedGraph g;
    g.var_names = var_names;
    g.tau_max = tau_max;
    g.mode = "lpcmci-lite";
    const int n = static_cast<int>(var_names.size());
    for (int dst = 0; dst < n; ++dst) {
        for (int src = 0; src < n; ++src) {
            for (int tau = 0; tau <= tau_max; ++tau) {
                if (tau == 0 && src >= dst) continue;
                GraphEdge e;
                e.src = {src, tau};
                e.dst = {dst, 0};
                e.mark_src = EndMark::circle;
                e.mark_dst = (tau >= 1) ? EndMark::arrow : EndMark::circle;
                e.middle_mark = MiddleMark::unconfirmed;
                g.edges.push_back(e);
            }
        }
    }
    g.sort_edges();
    return g;
}

/// Reduced latent-aware discovery ("LPCMCI-lite"): starts fully connected,
/// prunes edges with conditioning sets drawn from the current lagged
/// adjacencies of both endpoints (growing level p), then orients
/// contemporaneous colliders over unshielded triples using the recorded
/// separating sets. Lagged source marks stay circles: with possible latent
/// confounders the past end is never claimed as a direct cause.
inline LaggedGraph run_lpcmci(const TimeSeriesPanel& panel, const DiscoveryConfig& config) {
    config.validate();
    if (config.mode != DiscoveryMode::lpcmci) throw ConfigError("run_lpcmci requires mode = lpcmci");
    if (panel.any_missing()) throw DataError("discovery requires a fully observed panel");
    if (static_cast<int>(panel.rows()) <= 10 * config.tau_max) {
        throw DataError("need T > 10 * tau_max rows, got T=" + std::to_string(panel.rows()));
    }
    const detail::LaggedData data(panel, config.tau_max);
    const int max_p = config.max_cond_dim.value_or(std::numeric_limits<int>::max());

    LaggedGraph g = initial_full_graph(panel.names, config.tau_max);
    // Sepsets keyed by the (src, dst) node pair of a removed edge.
    std::map<std::pair<GraphNode, GraphNode>, std::vector<GraphNode>> sepsets;

    const auto lagged_adjacent = [&](int var) {
        // Lagged nodes currently adjacent to (var, 0), with edge strength.
        std::vector<std::pair<GraphNode, double>> out;
        for (const auto& e : g.edges) {
            if (e.dst.var == var && e.src.lag >= 1) out.emplace_back(e.src, std::fabs(e.statistic));
        }
        return out;
    };

    for (int p = 0; p <= max_p; ++p) {
        bool any_tested = false;
        std::vector<std::size_t> to_remove;
        std::vector<std::pair<std::size_t, CITestResult>> updates;

        for (std::size_t ei = 0; ei < g.edges.size(); ++ei) {
            const auto& e = g.edges[ei];
            // Conditioning pool: identified lagged neighbours of the target,
            // plus the source's own lagged neighbours shifted into the
            // source's time frame (capped at tau_max by the sample window).
            std::map<GraphNode, double> pool_strength;
            for (const auto& [node, stat] : lagged_adjacent(e.dst.var)) {
                if (!(node == e.src)) pool_strength[node] = std::max(pool_strength[node], stat);
            }
            for (const auto& [node, stat] : lagged_adjacent(e.src.var)) {
                const GraphNode shifted{node.var, node.lag + e.src.lag};
                if (shifted.lag > config.tau_max) continue;
                if (shifted == e.src || shifted == e.dst) continue;
                pool_strength[shifted] = std::max(pool_strength[shifted], stat);
            }
            std::vector<std::pair<GraphNode, double>> pool(pool_strength.begin(), pool_strength.end());
            std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return detail::node_order(a.first, b.first);
            });

            if (static_cast<int>(pool.size()) < p) continue;
            std::vector<GraphNode> z;
            for (int i = 0; i < p; ++i) z.push_back(pool[static_cast<std::size_t>(i)].first);

            const auto res = detail::run_ci(data, config, panel.names, e.src, e.dst, z, p, "lpcmci");
            any_tested = true;
            if (res.p_value > config.alpha_mci) {
                to_remove.push_back(ei);
                sepsets[{e.src, e.dst}] = z;
            } else {
                updates.emplace_back(ei, res);
            }
        }

        for (const auto& [ei, res] : updates) {
            g.edges[ei].statistic = res.statistic;
            g.edges[ei].p_value = res.p_value;
        }
        for (auto it = to_remove.rbegin(); it != to_remove.rend(); ++it) {
            g.edges.erase(g.edges.begin() + static_cast<std::ptrdiff_t>(*it));
        }
        if (!any_tested) break;
    }

    for (auto& e : g.edges) e.middle_mark = MiddleMark::confirmed;

    // Collider orientation on unshielded triples a - c - b with c at lag 0:
    // if c is not in sepset(a, b), both edges point into c.
    const auto find_edge = [&](const GraphNode& u, const GraphNode& v) -> GraphEdge* {
        for (auto& e : g.edges) {
            if ((e.src == u && e.dst == v) || (e.src == v && e.dst == u)) return &e;
        }
        return nullptr;
    };
    for (const auto& [pair, sep] : sepsets) {
        const auto& [a, b] = pair;
        for (int cv = 0; cv < static_cast<int>(panel.cols()); ++cv) {
            const GraphNode c{cv, 0};
            if (c == a || c == b) continue;
            if (std::find(sep.begin(), sep.end(), c) != sep.end()) continue;
            GraphEdge* eac = find_edge(a, c);
            GraphEdge* ebc = find_edge(b, c);
            if (eac == nullptr || ebc == nullptr) continue;
            const auto orient_into_c = [&](GraphEdge* e) {
                if (e->src == c) {
                    e->mark_src = EndMark::arrow;
                } else {
                    e->mark_dst = EndMark::arrow;
                }
            };
            orient_into_c(eac);
            orient_into_c(ebc);
        }
    }

    g.alpha = config.alpha_mci;
    g.sort_edges();
    g.validate();
    return g;
}

/// Mode dispatch used by the CLI.
inline LaggedGraph run_discovery(const TimeSeriesPanel& panel, const DiscoveryConfig& config) {
    return config.mode == DiscoveryMode::pcmci ? run_pcmci(panel, config) : run_lpcmci(panel, config);
}

} // namespace causalcast
