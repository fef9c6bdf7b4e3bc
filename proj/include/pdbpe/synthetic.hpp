#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdbpe/types.hpp"

namespace pdbpe::synthetic {

/// Two-class benchmark: class "A" series carry a planted pulse motif, class "B" do not.
struct MotifSpec {
    std::size_t series = 200;
    std::size_t length = 288;
    std::size_t motif_length = 12;
    double noise_sigma = 0.3;
    double missing_fraction = 0.10;
    double motif_amplitude = 3.0;
    /// Optional slow oscillation (period 96, random phase) under every series; off by default.
    double background_amplitude = 0.0;
    std::size_t groups = 0;  // 0 = no group ids
    std::uint64_t seed = 7;
};

struct PlantedMotif {
    std::string series_id;
    std::size_t start = 0;
    std::size_t length = 0;
};

struct MotifDataset {
    Dataset data;  // labels "A" / "B" attached
    std::vector<PlantedMotif> motifs;
};

MotifDataset make_motif_dataset(const MotifSpec& spec);

/// Gaussian random walks, one channel per name; labels are the walk's final value.
Dataset make_random_walks(std::size_t series, std::size_t length, const std::vector<std::string>& channels,
                          std::uint64_t seed);

}  // namespace pdbpe::synthetic
