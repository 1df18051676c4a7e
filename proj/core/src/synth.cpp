#include "collusion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "collusion/errors.hpp"
#include "collusion/rng.hpp"

namespace collusion {

BidTable generate_synthetic(const SynthConfig& cfg) {
    if (cfg.cartel_size < 2) throw ConfigError("cartel_size must be >= 2");
    if (cfg.cartel_size > cfg.n_companies)
        throw ConfigError("cartel_size exceeds company count");
    if (cfg.shrink <= 0.0 || cfg.shrink > 1.0)
        throw ConfigError("shrink factor must be in (0, 1]");
    if (cfg.min_bidders < 2 || cfg.max_bidders < cfg.min_bidders)
        throw ConfigError("invalid bidder range");
    if (cfg.participation_rate < 0.0 || cfg.participation_rate > 1.0)
        throw ConfigError("participation_rate must be in [0, 1]");

    Rng rng(cfg.seed);
    BidTable table;
    table.dataset_name = "synthetic";

    // All companies are partitioned into co-bidding peer groups of
    // cartel_size; every tender is hosted by one group, so participation
    // patterns are exchangeable across companies. Only group 0 is the cartel
    // whose hosted tenders get rigged. This keeps the bid-count and
    // co-occurrence structure label-free: with no price distortion the
    // labeled bids are statistically indistinguishable from the rest.
    const std::size_t n_groups = cfg.n_companies / cfg.cartel_size;
    if (n_groups < 2) throw ConfigError("need at least two peer groups of cartel_size");
    auto company_name = [](std::size_t i) { return "C" + std::to_string(i); };

    std::size_t rig_counter = 0;
    for (std::size_t t = 0; t < cfg.n_tenders; ++t) {
        const std::size_t n_bidders =
            cfg.min_bidders + rng.index(cfg.max_bidders - cfg.min_bidders + 1);
        const double cost = std::exp(rng.normal(std::log(1e5), cfg.cost_sd));
        const std::string tender_id = "T" + std::to_string(t);
        const std::string location_id = "L" + std::to_string(rng.index(cfg.n_locations));
        const std::size_t group = rng.index(n_groups);
        const bool rigged = group == 0 && rng.bernoulli(cfg.participation_rate);

        // The host group fills the tender (at most one outsider slips in),
        // so a rigged tender's labels are near-uniform across its bids.
        std::vector<std::size_t> participants;
        const std::size_t cap = std::min(cfg.cartel_size, n_bidders);
        const std::size_t n_core = (cap > 2 && rng.bernoulli(0.3)) ? cap - 1 : cap;
        std::vector<std::size_t> members(cfg.cartel_size);
        std::iota(members.begin(), members.end(), group * cfg.cartel_size);
        std::shuffle(members.begin(), members.end(), rng.engine());
        participants.assign(members.begin(), members.begin() + n_core);
        while (participants.size() < n_bidders) {
            const std::size_t c = rng.index(cfg.n_companies);
            if (c / cfg.cartel_size != group &&
                std::find(participants.begin(), participants.end(), c) == participants.end())
                participants.push_back(c);
        }
        const std::size_t n_cartel = rigged ? n_core : 0;

        // Margins over cost. Rigged tenders re-use a competitive draw with
        // the spread above the minimum compressed by `shrink` and the whole
        // tender shifted by the markup, so the null configuration (markup 0,
        // shrink 1) is distributionally identical to a competitive tender.
        std::vector<double> margins(n_bidders);
        for (double& m : margins)
            m = cfg.base_dispersion * static_cast<double>(rng.index(cfg.margin_levels) + 1) /
                static_cast<double>(cfg.margin_levels);
        if (rigged) {
            const double markup = std::max(0.0, rng.normal(cfg.markup_mean, cfg.markup_sd));
            const double lo = *std::min_element(margins.begin(), margins.begin() + n_cartel);
            // Designated winner rotates through the cartel; give them the
            // lowest cartel margin.
            const std::size_t designated = rig_counter++ % n_cartel;
            std::swap(margins[designated],
                      margins[std::min_element(margins.begin(), margins.begin() + n_cartel) -
                              margins.begin()]);
            for (std::size_t i = 0; i < n_cartel; ++i)
                margins[i] = markup + lo + cfg.shrink * (margins[i] - lo);
            for (std::size_t i = n_cartel; i < n_bidders; ++i)
                margins[i] = 1.5 * markup + margins[i];
        }

        for (std::size_t i = 0; i < n_bidders; ++i) {
            BidRecord rec;
            rec.tender_id = tender_id;
            rec.company_id = company_name(participants[i]);
            rec.location_id = location_id;
            rec.site_id = "S" + std::to_string(participants[i] % cfg.n_sites);
            rec.bid_value = cost * (1.0 + margins[i]);
            rec.date = static_cast<double>(t);
            rec.label = (rigged && i < n_cartel) ? 1 : 0;
            table.records.push_back(std::move(rec));
        }
        // Winner flag from the actual lowest bid, ties to the earlier row.
        const std::size_t base = table.records.size() - n_bidders;
        std::size_t best = base;
        for (std::size_t i = base; i < table.records.size(); ++i)
            if (table.records[i].bid_value < table.records[best].bid_value) best = i;
        table.records[best].winner = 1;
    }
    return table;
}

}  // namespace collusion
