#pragma once

#include <map>
#include <span>
#include <vector>

#include "pdbpe/types.hpp"

namespace pdbpe {

/// Median length of the constant runs of each symbol over the training corpus.
struct RcsmMedians {
    std::map<Symbol, int> medians;

    /// Symbols never seen in training default to 1 (RCS behaviour).
    int median(Symbol s) const;

    bool operator==(const RcsmMedians&) const = default;
};

/// Maximal constant run: `length` copies of `symbol` starting at `start`.
struct Run {
    Symbol symbol;
    std::size_t start;
    std::size_t length;
};

std::vector<Run> runs_of(std::span<const Symbol> symbols);

/// Collapses each constant run to a single symbol.
SymbolSeq apply_rcs(std::span<const Symbol> symbols);

/// Lower median of run lengths per symbol.
RcsmMedians fit_rcsm_medians(std::span<const SymbolSeq> training);

/// A run of length L emits one copy when L <= median, otherwise two.
SymbolSeq apply_rcsm(std::span<const Symbol> symbols, const RcsmMedians& medians);

/// Signed first differences; length-1 input yields an empty sequence.
SymbolSeq apply_autoregressive(std::span<const Symbol> symbols);

/// Alphabet the miner sees for a variation: K, or 2K - 1 for AUTOREGRESSIVE.
int base_alphabet_size(Variation v, int K);

/// Autoregressive differences are stored shifted by K - 1 so symbols start at 0.
inline Symbol ar_to_offset(Symbol diff, int K) { return diff + (K - 1); }
inline Symbol ar_from_offset(Symbol offset, int K) { return offset - (K - 1); }

/// Variation sequence in the miner's alphabet (AUTOREGRESSIVE offset-encoded).
SymbolSeq make_variation(std::span<const Symbol> symbols, Variation v, int K, const RcsmMedians& medians);

/// Inclusive range of discretized (PAA) positions covered by one variation symbol.
struct SourceRange {
    std::size_t first;
    std::size_t last;
};

/// Same as make_variation, also reporting where each output symbol came from.
SymbolSeq make_variation_traced(std::span<const Symbol> symbols, Variation v, int K, const RcsmMedians& medians,
                                std::vector<SourceRange>& trace);

}  // namespace pdbpe
