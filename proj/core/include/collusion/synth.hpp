#pragma once

#include <cstdint>

#include "collusion/dataio.hpp"

namespace collusion {

// Planted-cartel benchmark generator. A fixed cartel co-bids in a fraction
// of tenders: the designated winner (rotating among members) carries the
// configured markup and the covers sit above it with dispersion compressed
// by `shrink`. With markup 0 and shrink 1 the rigged tenders are drawn from
// exactly the competitive distribution (null-signal mode).
struct SynthConfig {
    std::size_t n_tenders = 400;
    std::size_t n_companies = 60;
    std::size_t cartel_size = 8;
    // Probability that a cartel-hosted tender is actually rigged; tenders are
    // hosted round-robin by peer groups, so the rigged share of all tenders
    // is participation_rate / (n_companies / cartel_size).
    double participation_rate = 1.0;
    double markup_mean = 0.15;
    double markup_sd = 0.03;
    double shrink = 0.5;               // cover-bid dispersion factor, (0, 1]
    double base_dispersion = 0.30;     // competitive margin range
    // Competitive margins are drawn from a small lattice so distinct tenders
    // collide in screen space; a model cannot memorize tender fingerprints,
    // which keeps the null-signal mode genuinely unlearnable.
    std::size_t margin_levels = 2;
    double cost_sd = 0.0;              // log-sd of the tender cost scale
    std::size_t min_bidders = 4;
    std::size_t max_bidders = 8;
    std::size_t n_locations = 5;
    std::size_t n_sites = 6;
    std::uint64_t seed = 1;
};

BidTable generate_synthetic(const SynthConfig& config);

}  // namespace collusion
