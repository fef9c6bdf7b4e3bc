#include "pdbpe/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace pdbpe::synthetic {

namespace {

// Box-Muller over mt19937_64 so the stream is identical on every standard library.
class Gaussian {
public:
    explicit Gaussian(std::mt19937_64& rng) : rng_(rng) {}
    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64& rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

MotifDataset make_motif_dataset(const MotifSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    Gaussian normal(rng);
    MotifDataset out;
    out.data = Dataset({"x"});

    for (std::size_t i = 0; i < spec.series; ++i) {
        TimeSeries s;
        s.id = "s" + std::to_string(i);
        s.channels = {"x"};
        s.values = Matrix(spec.length, 1);
        s.mask.assign(spec.length, 1);
        const bool planted = i % 2 == 0;
        s.label = std::string(planted ? "A" : "B");
        if (spec.groups > 0) s.group_id = "g" + std::to_string(i % spec.groups);

        const double phase = 2.0 * std::numbers::pi * uniform01(rng);
        for (std::size_t t = 0; t < spec.length; ++t) {
            const double slow = spec.background_amplitude *
                                std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 96.0 + phase);
            s.values(t, 0) = slow + spec.noise_sigma * normal();
        }
        if (planted) {
            const std::size_t span = spec.length - spec.motif_length;
            const std::size_t start = static_cast<std::size_t>(rng() % (span + 1));
            for (std::size_t t = start; t < start + spec.motif_length; ++t) s.values(t, 0) += spec.motif_amplitude;
            out.motifs.push_back({s.id, start, spec.motif_length});
        }
        for (std::size_t t = 0; t < spec.length; ++t) {
            if (uniform01(rng) < spec.missing_fraction) s.mask[t] = 0;
        }
        s.mask[0] = 1;  // at least one observation per series
        out.data.add(std::move(s));
    }
    return out;
}

Dataset make_random_walks(std::size_t series, std::size_t length, const std::vector<std::string>& channels,
                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Gaussian normal(rng);
    Dataset data(channels);
    for (std::size_t i = 0; i < series; ++i) {
        TimeSeries s;
        s.id = "w" + std::to_string(i);
        s.channels = channels;
        s.values = Matrix(length, channels.size());
        s.mask.assign(length * channels.size(), 1);
        for (std::size_t c = 0; c < channels.size(); ++c) {
            double level = 0.0;
            for (std::size_t t = 0; t < length; ++t) {
                level += normal();
                s.values(t, c) = level;
            }
        }
        s.label = s.values(length - 1, 0);
        data.add(std::move(s));
    }
    return data;
}

}  // namespace pdbpe::synthetic
