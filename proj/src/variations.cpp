#include "pdbpe/variations.hpp"

#include <algorithm>

namespace pdbpe {

int RcsmMedians::median(Symbol s) const {
    const auto it = medians.find(s);
    return it == medians.end() ? 1 : it->second;
}

std::vector<Run> runs_of(std::span<const Symbol> symbols) {
    std::vector<Run> runs;
    for (std::size_t i = 0; i < symbols.size();) {
        std::size_t j = i + 1;
        while (j < symbols.size() && symbols[j] == symbols[i]) ++j;
        runs.push_back({symbols[i], i, j - i});
        i = j;
    }
    return runs;
}

SymbolSeq apply_rcs(std::span<const Symbol> symbols) {
    SymbolSeq out;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i == 0 || symbols[i] != symbols[i - 1]) out.push_back(symbols[i]);
    }
    return out;
}

RcsmMedians fit_rcsm_medians(std::span<const SymbolSeq> training) {
    std::map<Symbol, std::vector<int>> lengths;
    for (const auto& seq : training) {
        for (const Run& r : runs_of(seq)) lengths[r.symbol].push_back(static_cast<int>(r.length));
    }
    RcsmMedians out;
    for (auto& [symbol, ls] : lengths) {
        std::sort(ls.begin(), ls.end());
        out.medians[symbol] = ls[(ls.size() - 1) / 2];
    }
    return out;
}

SymbolSeq apply_rcsm(std::span<const Symbol> symbols, const RcsmMedians& medians) {
    SymbolSeq out;
    for (const Run& r : runs_of(symbols)) {
        out.push_back(r.symbol);
        if (static_cast<int>(r.length) > medians.median(r.symbol)) out.push_back(r.symbol);
    }
    return out;
}

SymbolSeq apply_autoregressive(std::span<const Symbol> symbols) {
    SymbolSeq out;
    if (symbols.size() < 2) return out;
    out.reserve(symbols.size() - 1);
    for (std::size_t t = 1; t < symbols.size(); ++t) out.push_back(symbols[t] - symbols[t - 1]);
    return out;
}

int base_alphabet_size(Variation v, int K) { return v == Variation::Autoregressive ? 2 * K - 1 : K; }

SymbolSeq make_variation(std::span<const Symbol> symbols, Variation v, int K, const RcsmMedians& medians) {
    switch (v) {
        case Variation::Original: return SymbolSeq(symbols.begin(), symbols.end());
        case Variation::Rcs: return apply_rcs(symbols);
        case Variation::Rcsm: return apply_rcsm(symbols, medians);
        case Variation::Autoregressive: {
            SymbolSeq out = apply_autoregressive(symbols);
            for (Symbol& s : out) s = ar_to_offset(s, K);
            return out;
        }
    }
    return {};
}

SymbolSeq make_variation_traced(std::span<const Symbol> symbols, Variation v, int K, const RcsmMedians& medians,
                                std::vector<SourceRange>& trace) {
    trace.clear();
    switch (v) {
        case Variation::Original:
            for (std::size_t i = 0; i < symbols.size(); ++i) trace.push_back({i, i});
            break;
        case Variation::Rcs:
            for (const Run& r : runs_of(symbols)) trace.push_back({r.start, r.start + r.length - 1});
            break;
        case Variation::Rcsm:
            for (const Run& r : runs_of(symbols)) {
                const SourceRange whole{r.start, r.start + r.length - 1};
                trace.push_back(whole);
                if (static_cast<int>(r.length) > medians.median(r.symbol)) trace.push_back(whole);
            }
            break;
        case Variation::Autoregressive:
            for (std::size_t t = 1; t < symbols.size(); ++t) trace.push_back({t - 1, t});
            break;
    }
    return make_variation(symbols, v, K, medians);
}

}  // namespace pdbpe
