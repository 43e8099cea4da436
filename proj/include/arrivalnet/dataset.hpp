// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "arrivalnet/data.hpp"

namespace arrivalnet {

struct LoadResult {
    std::vector<Trip> trips;
    size_t rejected_lines = 0;
    std::vector<std::string> diagnostics;  // one message per rejected line
};

/// Reads the JSONL trip format, one trip per line. Malformed lines are
/// rejected with line-numbered diagnostics; more than 10% rejects fail hard.
LoadResult load_dataset(const std::string& path);

void save_dataset(const std::vector<Trip>& trips, const std::string& path);

std::string trip_to_json_line(const Trip& trip);

}  // namespace arrivalnet
