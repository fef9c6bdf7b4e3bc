#include "pdbpe/bpe.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <unordered_map>

#include "pdbpe/parallel.hpp"

namespace pdbpe {

Vocabulary::Vocabulary(int base_size) : base_size_(base_size) {
    if (base_size < 1) throw DataError("vocabulary base size must be >= 1");
    decoded_.reserve(static_cast<std::size_t>(base_size));
    for (Symbol s = 0; s < base_size; ++s) decoded_.push_back({s});
}

void Vocabulary::add_rule(const MergeRule& rule) {
    if (rule.new_symbol != symbol_count())
        throw DataError("merge rule introduces symbol " + std::to_string(rule.new_symbol) + ", expected " +
                        std::to_string(symbol_count()));
    if (rule.left < 0 || rule.right < 0 || rule.left >= rule.new_symbol || rule.right >= rule.new_symbol)
        throw DataError("merge rule " + std::to_string(rule.new_symbol) + " references a later symbol");
    SymbolSeq seq = decoded_[rule.left];
    const SymbolSeq& tail = decoded_[rule.right];
    seq.insert(seq.end(), tail.begin(), tail.end());
    rules_.push_back(rule);
    decoded_.push_back(std::move(seq));
}

const MergeRule& Vocabulary::rule_for(Symbol s) const {
    if (!is_pattern(s) || s >= symbol_count()) throw DataError("symbol " + std::to_string(s) + " is not a pattern");
    return rules_[static_cast<std::size_t>(s - base_size_)];
}

const SymbolSeq& Vocabulary::decode(Symbol symbol) const {
    if (symbol < 0 || symbol >= symbol_count())
        throw DataError("unknown symbol " + std::to_string(symbol) + " (vocabulary has " +
                        std::to_string(symbol_count()) + ")");
    return decoded_[static_cast<std::size_t>(symbol)];
}

SymbolSeq Vocabulary::encode(std::span<const Symbol> symbols) const {
    for (Symbol s : symbols) {
        if (s < 0 || s >= base_size_)
            throw DataError("symbol " + std::to_string(s) + " outside base alphabet of size " +
                            std::to_string(base_size_));
    }
    SymbolSeq seq(symbols.begin(), symbols.end());
    for (const MergeRule& r : rules_) {
        if (seq.size() < 2) break;
        replace_pair(seq, r.left, r.right, r.new_symbol);
    }
    return seq;
}

std::size_t replace_pair(SymbolSeq& seq, Symbol left, Symbol right, Symbol merged) {
    std::size_t out = 0;
    std::size_t replaced = 0;
    const std::size_t n = seq.size();
    for (std::size_t i = 0; i < n;) {
        if (i + 1 < n && seq[i] == left && seq[i + 1] == right) {
            seq[out++] = merged;
            i += 2;
            ++replaced;
        } else {
            seq[out++] = seq[i++];
        }
    }
    seq.resize(out);
    return replaced;
}

namespace {

using PairKey = std::uint64_t;

PairKey pack(Symbol left, Symbol right) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) |
           static_cast<std::uint32_t>(right);
}
Symbol key_left(PairKey k) { return static_cast<Symbol>(k >> 32); }
Symbol key_right(PairKey k) { return static_cast<Symbol>(k & 0xffffffffu); }

using LocalCounts = std::vector<std::pair<PairKey, std::int64_t>>;

// Pair counts of a single series, sorted by key. Self pairs come from runs
// (floor(n/2) each), other pairs from run boundaries.
LocalCounts local_counts(const SymbolSeq& seq) {
    LocalCounts raw;
    for (std::size_t i = 0; i < seq.size();) {
        std::size_t j = i + 1;
        while (j < seq.size() && seq[j] == seq[i]) ++j;
        const std::size_t len = j - i;
        if (len >= 2) raw.emplace_back(pack(seq[i], seq[i]), static_cast<std::int64_t>(len / 2));
        if (j < seq.size()) raw.emplace_back(pack(seq[j - 1], seq[j]), 1);
        i = j;
    }
    std::sort(raw.begin(), raw.end());
    LocalCounts out;
    for (const auto& [k, c] : raw) {
        if (!out.empty() && out.back().first == k)
            out.back().second += c;
        else
            out.emplace_back(k, c);
    }
    return out;
}

bool contains_key(const LocalCounts& counts, PairKey key) {
    const auto it = std::lower_bound(counts.begin(), counts.end(), std::make_pair(key, std::int64_t{0}),
                                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return it != counts.end() && it->first == key;
}

// Global pair table with an ordered index for argmax queries.
class PairTable {
public:
    void adjust(PairKey key, std::int64_t dfreq, std::int64_t dsupport) {
        PairStats& st = stats_[key];
        if (st.frequency > 0) order_.erase({-st.frequency, key});
        st.frequency += dfreq;
        st.support += dsupport;
        if (st.frequency > 0)
            order_.insert({-st.frequency, key});
        else
            stats_.erase(key);
    }

    bool empty() const { return order_.empty(); }
    PairKey best() const { return order_.begin()->second; }
    const PairStats& at(PairKey key) const { return stats_.at(key); }

private:
    std::unordered_map<PairKey, PairStats> stats_;
    std::set<std::pair<std::int64_t, PairKey>> order_;
};

}  // namespace

std::map<SymbolPair, PairStats> count_pairs(std::span<const SymbolSeq> corpus) {
    std::map<SymbolPair, PairStats> out;
    for (const auto& seq : corpus) {
        for (const auto& [k, c] : local_counts(seq)) {
            PairStats& st = out[{key_left(k), key_right(k)}];
            st.frequency += c;
            st.support += 1;
        }
    }
    return out;
}

std::int64_t total_pair_slots(std::span<const SymbolSeq> corpus) {
    std::int64_t t = 0;
    for (const auto& seq : corpus) {
        if (!seq.empty()) t += static_cast<std::int64_t>(seq.size()) - 1;
    }
    return t;
}

double stop_threshold(std::size_t series_count, std::int64_t pair_slots, double P, double U) {
    return std::max(static_cast<double>(series_count) * P, static_cast<double>(pair_slots) * U);
}

BpeFit fit_bpe(std::vector<SymbolSeq> corpus, int base_size, const BpeParams& params) {
    BpeFit fit;
    fit.vocab = Vocabulary(base_size);
    for (const auto& seq : corpus) {
        for (Symbol s : seq) {
            if (s < 0 || s >= base_size)
                throw DataError("symbol " + std::to_string(s) + " outside base alphabet of size " +
                                std::to_string(base_size));
        }
    }
    fit.pair_slots = total_pair_slots(corpus);
    fit.threshold = stop_threshold(corpus.size(), fit.pair_slots, params.P, params.U);

    // Per-series counting fans out; the reduction below runs in series order.
    std::vector<LocalCounts> local(corpus.size());
    parallel_for(corpus.size(), [&](std::size_t i) { local[i] = local_counts(corpus[i]); });

    PairTable table;
    std::unordered_map<PairKey, std::vector<std::uint32_t>> holders;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (const auto& [k, c] : local[i]) {
            table.adjust(k, c, 1);
            holders[k].push_back(static_cast<std::uint32_t>(i));
        }
    }

    while (!table.empty()) {
        if (params.max_rules != 0 && fit.vocab.rules().size() >= params.max_rules) break;
        const PairKey key = table.best();
        const PairStats best = table.at(key);
        if (static_cast<double>(best.frequency) < fit.threshold) break;

        const Symbol merged = fit.vocab.symbol_count();
        const Symbol left = key_left(key);
        const Symbol right = key_right(key);
        fit.vocab.add_rule({merged, left, right, best.frequency, best.support});

        std::vector<std::uint32_t> candidates = std::move(holders[key]);
        holders.erase(key);
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

        for (std::uint32_t s : candidates) {
            LocalCounts& old_counts = local[s];
            if (!contains_key(old_counts, key)) continue;  // stale holder entry
            for (const auto& [k, c] : old_counts) table.adjust(k, -c, -1);
            replace_pair(corpus[s], left, right, merged);
            LocalCounts fresh = local_counts(corpus[s]);
            for (const auto& [k, c] : fresh) {
                table.adjust(k, c, 1);
                if (!contains_key(old_counts, k)) holders[k].push_back(s);
            }
            old_counts = std::move(fresh);
        }
    }

    fit.encoded = std::move(corpus);
    return fit;
}

}  // namespace pdbpe
