#include "flatrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "flatrec/error.hpp"
#include "flatrec/rng.hpp"

namespace flatrec {

std::size_t planted_user_block(const PlantedConfig& cfg, std::size_t user_index) {
    return user_index * cfg.blocks / cfg.n_users;
}

std::size_t planted_item_block(const PlantedConfig& cfg, std::size_t item_index) {
    return item_index * cfg.blocks / cfg.n_items;
}

std::vector<InteractionRecord> planted_block_dataset(const PlantedConfig& cfg) {
    if (cfg.n_users == 0 || cfg.n_items == 0) throw Error("need users and items");
    if (cfg.blocks < 1 || cfg.blocks > cfg.n_users || cfg.blocks > cfg.n_items)
        throw Error("block count must be in [1, min(users, items)]");
    if (cfg.within < 0.0 || cfg.within > 1.0) throw Error("within-block probability must be in [0,1]");
    if (cfg.interactions_per_user < 1.0) throw Error("need at least one interaction per user");

    Rng rng(fork_seed(cfg.seed, 0x73796e74ULL));
    const std::size_t per_block_items = cfg.n_items / cfg.blocks;
    std::vector<InteractionRecord> out;
    out.reserve(cfg.n_users * static_cast<std::size_t>(cfg.interactions_per_user));

    // Zipf CDF over the slots of one block, shared by all blocks.
    const std::size_t max_block_items = per_block_items + cfg.n_items % cfg.blocks;
    std::vector<double> cdf(max_block_items);
    double acc = 0.0;
    for (std::size_t r = 0; r < max_block_items; ++r) {
        acc += 1.0 / std::pow(static_cast<double>(r + 1), cfg.popularity);
        cdf[r] = acc;
    }

    auto draw_slot = [&](std::size_t block_size, double p) {
        const double target = p * cdf[block_size - 1];
        auto it = std::lower_bound(cdf.begin(), cdf.begin() + static_cast<std::ptrdiff_t>(block_size),
                                   target);
        return static_cast<std::size_t>(it - cdf.begin());
    };

    // Latent taste position of a node inside its block, on the unit circle.
    auto taste_of = [](std::size_t index, std::size_t lo, std::size_t span) {
        return static_cast<double>(index - lo) / static_cast<double>(span);
    };
    auto kernel = [&](double a, double b) {
        double d = std::abs(a - b);
        d = std::min(d, 1.0 - d);
        return std::exp(-d / cfg.taste_bandwidth);
    };

    char key[32];
    for (std::size_t u = 0; u < cfg.n_users; ++u) {
        const std::size_t ub = planted_user_block(cfg, u);
        const std::size_t ub_lo = ub * (cfg.n_users / cfg.blocks);
        const std::size_t ub_span = (ub + 1 == cfg.blocks)
                                        ? cfg.n_users - ub_lo
                                        : cfg.n_users / cfg.blocks;
        const double user_taste = taste_of(u, ub_lo, ub_span);
        // 0.5 +/- jitter around the target count keeps degrees mildly uneven.
        const double jitter = 0.5 + rng.uniform_real();
        const auto count = static_cast<std::size_t>(
            std::max<long long>(1, std::llround(cfg.interactions_per_user * jitter)));
        for (std::size_t t = 0; t < count; ++t) {
            std::size_t block = ub;
            bool own_block = true;
            if (cfg.blocks > 1 && rng.uniform_real() >= cfg.within) {
                // Uniform over the other blocks.
                std::size_t other = rng.uniform(cfg.blocks - 1);
                block = other >= ub ? other + 1 : other;
                own_block = false;
            }
            const std::size_t lo = block * per_block_items;
            const std::size_t hi = (block + 1 == cfg.blocks) ? cfg.n_items : lo + per_block_items;
            std::size_t item = lo + draw_slot(hi - lo, rng.uniform_real());
            if (own_block && cfg.taste_bandwidth > 0.0) {
                // Rejection-thin the Zipf draw by taste proximity; bounded
                // retries keep the generator O(1) per interaction.
                for (int tries = 0; tries < 16; ++tries) {
                    const double item_taste = taste_of(item, lo, hi - lo);
                    if (rng.uniform_real() < kernel(user_taste, item_taste)) break;
                    item = lo + draw_slot(hi - lo, rng.uniform_real());
                }
            }

            InteractionRecord r;
            std::snprintf(key, sizeof(key), "u%05zu", u);
            r.user = key;
            std::snprintf(key, sizeof(key), "i%05zu", item);
            r.item = key;
            out.push_back(std::move(r));
        }
    }
    return out;
}

}  // namespace flatrec
