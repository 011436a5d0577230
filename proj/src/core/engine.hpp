#pragma once

#include <string>
#include <vector>

#include "ledger.hpp"
#include "scenario.hpp"

namespace sbdc {

// Deterministic discrete-event run: identical (scenario, seed) yields a
// bitwise-identical serialized ledger.
MetricsLedger run(const Scenario& scenario);

struct SweepEntry {
    std::string key;
    std::string value;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    MetricsLedger ledger;
};

// One run per (grid point, seed); execution order independent of results.
std::vector<SweepEntry> sweep(const std::string& scenario_text, const std::string& key,
                              const std::vector<std::string>& values, int n_seeds, int workers);

std::string sweep_aggregate_csv(const std::vector<SweepEntry>& entries);

}  // namespace sbdc
