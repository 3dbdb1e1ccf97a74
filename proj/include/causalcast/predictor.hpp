#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "causalcast/common.hpp"

namespace causalcast {

/// Smoothed back-off k-gram model over the token vocabulary. Conditional
/// distributions are (count + gamma) / (total + gamma * V); when a context of
/// order m has never been seen the model backs off to order m-1, down to the
/// unigram table. Smoothing keeps every conditional strictly positive and
/// summing to one.
class TokenPredictor {
public:
    TokenPredictor(int order, double gamma, int vocab_size)
        : order_(order), gamma_(gamma), vocab_(vocab_size), tables_(static_cast<std::size_t>(order) + 1) {
        if (order < 1) throw ConfigError("predictor order must be >= 1");
        if (gamma <= 0.0) throw ConfigError("smoothing gamma must be > 0");
        if (vocab_size < 2) throw ConfigError("vocabulary must hold at least 2 tokens");
    }

    int order() const { return order_; }
    int vocab_size() const { return vocab_; }
    double gamma() const { return gamma_; }

    void observe_sequence(const std::vector<int>& tokens) {
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            check_token(tokens[i]);
            for (int m = 0; m <= order_; ++m) {
                if (i < static_cast<std::size_t>(m)) break;
                const std::vector<int> ctx(tokens.begin() + static_cast<std::ptrdiff_t>(i - static_cast<std::size_t>(m)),
                                           tokens.begin() + static_cast<std::ptrdiff_t>(i));
                auto& row = tables_[static_cast<std::size_t>(m)][ctx];
                row.total += 1;
                row.counts[tokens[i]] += 1;
            }
        }
    }

    /// Conditional distribution over token ids 1..V given the trailing
    /// context (only the last `order` tokens matter).
    std::vector<double> conditional(const std::vector<int>& context) const {
        const CountRow* row = backoff_row(context);
        std::vector<double> p(static_cast<std::size_t>(vocab_), 0.0);
        const double denom =
            static_cast<double>(row ? row->total : 0) + gamma_ * static_cast<double>(vocab_);
        for (int tok = 1; tok <= vocab_; ++tok) {
            double count = 0.0;
            if (row != nullptr) {
                const auto it = row->counts.find(tok);
                if (it != row->counts.end()) count = static_cast<double>(it->second);
            }
            p[static_cast<std::size_t>(tok - 1)] = (count + gamma_) / denom;
        }
        return p;
    }

    double log_prob(int token, const std::vector<int>& context) const {
        check_token(token);
        const CountRow* row = backoff_row(context);
        const double denom =
            static_cast<double>(row ? row->total : 0) + gamma_ * static_cast<double>(vocab_);
        double count = 0.0;
        if (row != nullptr) {
            const auto it = row->counts.find(token);
            if (it != row->counts.end()) count = static_cast<double>(it->second);
        }
        return std::log((count + gamma_) / denom);
    }

private:
    struct CountRow {
        std::uint64_t total = 0;
        std::map<int, std::uint64_t> counts;
    };

    void check_token(int token) const {
        if (token < 1 || token > vocab_) {
            throw ConfigError("token " + std::to_string(token) + " outside vocabulary 1.." +
                              std::to_string(vocab_));
        }
    }

    // Longest seen suffix wins; the empty (unigram) context always applies,
    // with pure smoothing when no counts exist at all.
    const CountRow* backoff_row(const std::vector<int>& context) const {
        const int avail = static_cast<int>(context.size());
        for (int m = std::min(order_, avail); m >= 1; --m) {
            const std::vector<int> ctx(context.end() - m, context.end());
            const auto& table = tables_[static_cast<std::size_t>(m)];
            const auto it = table.find(ctx);
            if (it != table.end() && it->second.total > 0) return &it->second;
        }
        const auto& unigram = tables_[0];
        const auto it = unigram.find(std::vector<int>{});
        if (it != unigram.end() && it->second.total > 0) return &it->second;
        return nullptr;
    }

    int order_;
    double gamma_;
    int vocab_;
    std::vector<std::map<std::vector<int>, CountRow>> tables_;
};

/// Count maximum likelihood with additive smoothing, the minimiser of the
/// categorical cross-entropy within this model family.
inline TokenPredictor train_count_model(const std::vector<std::vector<int>>& corpus, int order,
                                        double gamma, int vocab_size) {
    if (corpus.empty()) throw ConfigError("training corpus is empty");
    TokenPredictor model(order, gamma, vocab_size);
    for (const auto& seq : corpus) model.observe_sequence(seq);
    return model;
}

/// Categorical cross-entropy of the forecast-and-EOS positions:
/// -sum log p(z_j | z_{1:j-1}) over j = C+1 .. len(tokens).
inline double cross_entropy(const TokenPredictor& model, const std::vector<int>& tokens,
                            int context_len) {
    if (context_len < 0 || static_cast<std::size_t>(context_len) + 2 > tokens.size()) {
        throw ConfigError("cross_entropy: need at least one forecast token plus EOS beyond the context");
    }
    double loss = 0.0;
    for (std::size_t j = static_cast<std::size_t>(context_len); j < tokens.size(); ++j) {
        const std::vector<int> ctx(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(j));
        loss -= model.log_prob(tokens[j], ctx);
    }
    return loss;
}

} // namespace causalcast
