// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arrivalnet/data.hpp"

namespace arrivalnet {

struct Point {
    double x = 0.0;  // meters, planar
    double y = 0.0;
};

/// One route segment between adjacent stops.
struct Link {
    double distance_km = 0.0;
    double sched_travel_s = 0.0;
    double mean_travel_s = 0.0;
    bool signal = false;
    std::vector<Point> waypoints;
};

struct Route {
    std::string id;
    std::vector<Link> links;  // links[j] connects stop j to stop j+1
};

struct Network {
    std::vector<Route> routes;
    std::vector<Point> signal_positions;
    double signal_threshold_m = 20.0;
};

struct TripEvent {
    enum class Kind { kStopPassage, kDoorOpen, kTriggerPassage };
    Kind kind = Kind::kStopPassage;
    int stop_index = 0;  // for triggers: the stop the trigger follows
    double time_s = 0.0;  // seconds since trip start
};

/// Raw event log of one vehicle run, plus the generator's internal
/// cumulative-delay state used for validation.
struct TripLog {
    std::string route_id;
    std::string trip_id;
    int route_index = 0;
    double depart_clock_s = 0.0;  // seconds since midnight
    bool weekday = false;
    std::vector<TripEvent> events;
    std::vector<double> sched_arrivals_s;       // per stop 1..S-1, since trip start
    std::vector<double> internal_cum_delay_s;   // per stop 1..S-1
};

struct SimOptions {
    int n_routes = 4;
    int stops_per_route = 30;
    int days = 2;
    double headway_s = 1200.0;
    double service_start_s = 5.0 * 3600.0;
    double service_end_s = 22.0 * 3600.0;
    std::string profile = "tram";  // or "bus"
    bool clip_negative = false;

    // Delay-propagation knobs (free parameters; defaults calibrated against
    // the target marginal statistics).
    double increment_bias_s = 1.75;
    double increment_sigma_s = 14.0;
    double signal_extra_mean_s = 7.0;
    double signal_red_prob = 0.5;
    double peak_extra_mean_s = 7.0;
    double recovery_min = 0.06;  // fraction of a negative delay recovered by dwell
    double recovery_max = 0.28;
    double skip_stop_prob = 0.04;
    double late_door_prob = 0.04;
    double signal_link_fraction = 0.3;
};

bool is_peak_clock(double clock_s, bool weekday);

Network generate_network(uint64_t seed, int n_routes, int stops_per_route, const SimOptions& opt);

/// All trips of one service day. day_index selects the calendar day
/// (weekday when day_index % 7 < 5); per-trip randomness derives
/// deterministically from the seed.
std::vector<TripLog> simulate_day(const Network& net, uint64_t seed, const SimOptions& opt,
                                  int day_index);

/// Applies the three arrival conditions to an event log and assembles the
/// per-stop records. Stops with a missing passage event truncate the
/// sequence; `dropped` (when given) counts them.
Trip extract_delays(const TripLog& log, const Network& net, size_t* dropped = nullptr);

/// End-to-end convenience: network + all days -> trips.
std::vector<Trip> simulate_dataset(const SimOptions& opt, uint64_t seed);

}  // namespace arrivalnet
