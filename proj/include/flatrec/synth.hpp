#pragma once

#include <cstdint>
#include <vector>

#include "flatrec/graph.hpp"

namespace flatrec {

// Planted-block benchmark data: users and items are split into `blocks`
// equal groups and each interaction lands inside the user's own block with
// probability `within`. Within a block, item choice is Zipf-skewed with
// exponent `popularity` (0 = uniform) and biased toward items whose latent
// taste position is near the user's (exponential kernel with width
// `taste_bandwidth` on the unit circle; <= 0 disables taste). This gives the
// hub-dominated, taste-clustered neighborhoods interaction logs actually
// have. Duplicate draws are kept (they merge into heavier edges at ingest).
struct PlantedConfig {
    std::size_t n_users = 1000;
    std::size_t n_items = 1000;
    std::size_t blocks = 2;
    double interactions_per_user = 20.0;
    double within = 0.9;
    std::uint64_t seed = 42;
    double popularity = 0.8;
    double taste_bandwidth = 0.07;
};

std::vector<InteractionRecord> planted_block_dataset(const PlantedConfig& cfg);

// Block index of a generated user/item key ("u0012" / "i0040").
std::size_t planted_user_block(const PlantedConfig& cfg, std::size_t user_index);
std::size_t planted_item_block(const PlantedConfig& cfg, std::size_t item_index);

}  // namespace flatrec
