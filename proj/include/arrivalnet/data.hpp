// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace arrivalnet {

/// Per-stop feature vector, fixed channel order:
/// link distance (km), scheduled link travel time (s), delay (s),
/// signal flag (0/1), historical mean link travel time (s).
struct StopRecord {
    double s_km = 0.0;
    double t_sched_s = 0.0;
    double delay_s = 0.0;
    double signal = 0.0;
    double t_mean_s = 0.0;
};

inline constexpr int kStopChannels = 5;
inline constexpr int kContextChannels = 2;
inline constexpr int kDelayChannel = 2;

/// One full vehicle run: the per-stop records plus scheduled arrival times
/// (seconds since trip start, aligned with `stops`) and static context.
struct Trip {
    std::string route_id;
    std::string trip_id;
    std::vector<StopRecord> stops;
    std::vector<double> sched_arrivals_s;
    bool peak = false;
    bool weekday = false;
};

/// Sliding-window training sample. `link_ids` identify the future links for
/// the link-delay export.
struct SequenceSample {
    std::vector<StopRecord> past;          // N_p records
    bool peak = false;
    bool weekday = false;
    std::vector<double> future_delays;     // N_f targets (s)
    std::vector<double> future_scheduled;  // N_f scheduled arrivals (s)
    std::vector<std::string> link_ids;     // N_f link identifiers
    double last_past_delay = 0.0;          // persistence anchor
};

/// Windows every trip with stride 1. Trips shorter than n_past + n_future
/// are skipped; `skipped` (when given) counts them.
std::vector<SequenceSample> build_windows(const std::vector<Trip>& trips, int n_past, int n_future,
                                          size_t* skipped = nullptr);

}  // namespace arrivalnet
