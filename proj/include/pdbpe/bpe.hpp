#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "pdbpe/types.hpp"

namespace pdbpe {

struct MergeRule {
    Symbol new_symbol = 0;
    Symbol left = 0;
    Symbol right = 0;
    std::int64_t train_frequency = 0;
    std::int64_t train_series_support = 0;

    bool operator==(const MergeRule&) const = default;
};

/// Ordered merge rules over a base alphabet [0, base_size).
/// Rule i introduces symbol base_size + i.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(int base_size);

    /// Appends a rule; throws DataError if it breaks the numbering or ordering invariants.
    void add_rule(const MergeRule& rule);

    int base_size() const { return base_size_; }
    const std::vector<MergeRule>& rules() const { return rules_; }
    int symbol_count() const { return base_size_ + static_cast<int>(rules_.size()); }
    bool is_pattern(Symbol s) const { return s >= base_size_; }
    const MergeRule& rule_for(Symbol s) const;

    /// Base symbols spelled out by `symbol`; length 1 for base symbols.
    const SymbolSeq& decode(Symbol symbol) const;

    /// Replays every rule in order. Throws DataError on symbols outside the base alphabet.
    SymbolSeq encode(std::span<const Symbol> symbols) const;

    bool operator==(const Vocabulary& other) const {
        return base_size_ == other.base_size_ && rules_ == other.rules_;
    }

private:
    int base_size_ = 0;
    std::vector<MergeRule> rules_;
    std::vector<SymbolSeq> decoded_;
};

using SymbolPair = std::pair<Symbol, Symbol>;

struct PairStats {
    std::int64_t frequency = 0;
    std::int64_t support = 0;

    bool operator==(const PairStats&) const = default;
};

/// Non-overlapping left-to-right pair frequencies and per-series support.
/// A run of n equal symbols contributes floor(n / 2) to the self pair.
std::map<SymbolPair, PairStats> count_pairs(std::span<const SymbolSeq> corpus);

/// Replaces non-overlapping occurrences of (left, right) scanning left to right.
/// Returns the number of replacements.
std::size_t replace_pair(SymbolSeq& seq, Symbol left, Symbol right, Symbol merged);

/// Number of adjacent pair slots, sum of (len - 1) over non-empty series.
std::int64_t total_pair_slots(std::span<const SymbolSeq> corpus);

/// Merging stops once the best pair frequency drops below max(N * P, T * U).
double stop_threshold(std::size_t series_count, std::int64_t pair_slots, double P, double U);

struct BpeParams {
    double P = 0.20;
    double U = 0.001;
    /// 0 = unlimited.
    std::size_t max_rules = 0;
};

struct BpeFit {
    Vocabulary vocab;
    std::vector<SymbolSeq> encoded;  // training corpus after all merges
    std::int64_t pair_slots = 0;
    double threshold = 0.0;
};

/// Learns the merge vocabulary for one corpus. Ties on frequency go to the
/// lexicographically smallest (left, right).
BpeFit fit_bpe(std::vector<SymbolSeq> corpus, int base_size, const BpeParams& params);

}  // namespace pdbpe
