// SPDX-License-Identifier: Apache-2.0
#include "arrivalnet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "arrivalnet/errors.hpp"

namespace arrivalnet {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct Profile {
    double mean_dist_km;
    double travel_base_s;
    double travel_per_km_s;
};

Profile profile_for(const std::string& name) {
    if (name == "tram") return {0.4702, 30.0, (92.19 - 30.0) / 0.4702};
    if (name == "bus") return {0.46, 25.0, (80.79 - 25.0) / 0.46};
    throw ConfigError("simulator: unknown profile \"" + name + "\" (expected tram or bus)");
}

double dist2(const Point& a, const Point& b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

}  // namespace

bool is_peak_clock(double clock_s, bool weekday) {
    if (!weekday) return false;
    const double h = clock_s / 3600.0;
    return (h >= 7.0 && h < 9.0) || (h >= 16.0 && h < 19.0);
}

Network generate_network(uint64_t seed, int n_routes, int stops_per_route, const SimOptions& opt) {
    if (n_routes < 1 || stops_per_route < 3) {
        throw ConfigError("generate_network: need at least 1 route and 3 stops per route");
    }
    const Profile prof = profile_for(opt.profile);
    std::mt19937_64 rng(splitmix64(seed));
    // Lognormal whose arithmetic mean matches the profile's link distance.
    const double sigma_log = 0.30;
    const double mu_log = std::log(prof.mean_dist_km) - 0.5 * sigma_log * sigma_log;
    std::lognormal_distribution<double> dist_km(mu_log, sigma_log);
    std::normal_distribution<double> sched_noise(0.0, 5.0);
    std::normal_distribution<double> mean_bias(2.0, 4.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.14159265358979323846);
    std::normal_distribution<double> jitter(0.0, 2.0);

    Network net;
    net.signal_threshold_m = 20.0;
    for (int r = 0; r < n_routes; ++r) {
        Route route;
        route.id = "R" + std::to_string(r);
        // Routes live far apart on the plane so signals never straddle routes.
        Point pos{static_cast<double>(r) * 1.0e6, 0.0};
        for (int j = 0; j + 1 < stops_per_route; ++j) {
            Link link;
            link.distance_km = dist_km(rng);
            link.sched_travel_s = std::max(25.0, prof.travel_base_s +
                                           prof.travel_per_km_s * link.distance_km + sched_noise(rng));
            link.mean_travel_s = std::max(20.0, link.sched_travel_s + mean_bias(rng));
            const double step_m = link.distance_km * 1000.0;
            const double theta = angle(rng);
            Point next{pos.x + step_m * std::cos(theta), pos.y + step_m * std::sin(theta)};
            constexpr int kWaypoints = 5;
            for (int w = 0; w < kWaypoints; ++w) {
                const double f = static_cast<double>(w + 1) / (kWaypoints + 1);
                link.waypoints.push_back({pos.x + f * (next.x - pos.x) + jitter(rng),
                                          pos.y + f * (next.y - pos.y) + jitter(rng)});
            }
            if (unit(rng) < opt.signal_link_fraction) {
                const auto& wp = link.waypoints[static_cast<size_t>(
                    std::min<int>(kWaypoints - 1, static_cast<int>(unit(rng) * kWaypoints)))];
                std::uniform_real_distribution<double> off(-10.0, 10.0);
                net.signal_positions.push_back({wp.x + off(rng), wp.y + off(rng)});
            }
            route.links.push_back(std::move(link));
            pos = next;
        }
        net.routes.push_back(std::move(route));
    }
    // Flags always come from the proximity rule, never from the placement
    // bookkeeping above.
    const double thr2 = net.signal_threshold_m * net.signal_threshold_m;
    for (auto& route : net.routes) {
        for (auto& link : route.links) {
            link.signal = false;
            for (const auto& wp : link.waypoints) {
                for (const auto& sig : net.signal_positions) {
                    if (dist2(wp, sig) < thr2) {
                        link.signal = true;
                        break;
                    }
                }
                if (link.signal) break;
            }
        }
    }
    return net;
}

std::vector<TripLog> simulate_day(const Network& net, uint64_t seed, const SimOptions& opt,
                                  int day_index) {
    std::vector<TripLog> logs;
    const bool weekday = day_index % 7 < 5;
    for (size_t r = 0; r < net.routes.size(); ++r) {
        const Route& route = net.routes[r];
        int trip_no = 0;
        for (double depart = opt.service_start_s; depart < opt.service_end_s;
             depart += opt.headway_s, ++trip_no) {
            std::mt19937_64 rng(splitmix64(seed ^ (static_cast<uint64_t>(day_index) * 0x10001ULL +
                                                   r * 0x101ULL + static_cast<uint64_t>(trip_no))));
            std::normal_distribution<double> inc_noise(0.0, opt.increment_sigma_s);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::exponential_distribution<double> signal_extra(1.0 / opt.signal_extra_mean_s);
            std::exponential_distribution<double> peak_extra(1.0 / opt.peak_extra_mean_s);
            std::uniform_real_distribution<double> recovery(opt.recovery_min, opt.recovery_max);

            TripLog log;
            log.route_id = route.id;
            log.trip_id = route.id + "-d" + std::to_string(day_index) + "-t" + std::to_string(trip_no);
            log.route_index = static_cast<int>(r);
            log.depart_clock_s = depart;
            log.weekday = weekday;

            double sched = 0.0;
            double cum_delay = 0.0;
            for (size_t j = 0; j < route.links.size(); ++j) {
                const Link& link = route.links[j];
                sched += link.sched_travel_s;
                if (cum_delay < 0.0) cum_delay *= 1.0 - recovery(rng);
                double inc = opt.increment_bias_s + inc_noise(rng);
                if (link.signal && unit(rng) < opt.signal_red_prob) inc += signal_extra(rng);
                if (is_peak_clock(depart + sched, weekday)) inc += peak_extra(rng);
                // Keep actual travel times positive so events stay ordered.
                inc = std::max(inc, 15.0 - link.sched_travel_s);
                cum_delay += inc;

                const double arrival = sched + cum_delay;
                const int stop = static_cast<int>(j) + 1;
                const bool skip = unit(rng) < opt.skip_stop_prob;
                if (skip) {
                    log.events.push_back({TripEvent::Kind::kStopPassage, stop, arrival});
                    log.events.push_back({TripEvent::Kind::kTriggerPassage, stop, arrival + 10.0});
                } else if (unit(rng) < opt.late_door_prob) {
                    // Trigger sits right at the platform: crossed before the doors open.
                    log.events.push_back({TripEvent::Kind::kStopPassage, stop, arrival - 2.0});
                    log.events.push_back({TripEvent::Kind::kTriggerPassage, stop, arrival - 1.0});
                    log.events.push_back({TripEvent::Kind::kDoorOpen, stop, arrival});
                } else {
                    log.events.push_back({TripEvent::Kind::kStopPassage, stop, arrival - 2.0});
                    log.events.push_back({TripEvent::Kind::kDoorOpen, stop, arrival});
                    log.events.push_back({TripEvent::Kind::kTriggerPassage, stop, arrival + 10.0});
                }
                log.sched_arrivals_s.push_back(sched);
                log.internal_cum_delay_s.push_back(cum_delay);
            }
            std::stable_sort(log.events.begin(), log.events.end(),
                             [](const TripEvent& a, const TripEvent& b) { return a.time_s < b.time_s; });
            logs.push_back(std::move(log));
        }
    }
    return logs;
}

Trip extract_delays(const TripLog& log, const Network& net, size_t* dropped) {
    if (log.route_index < 0 || log.route_index >= static_cast<int>(net.routes.size())) {
        throw ContractError("extract_delays: log references unknown route");
    }
    const Route& route = net.routes[static_cast<size_t>(log.route_index)];
    Trip trip;
    trip.route_id = log.route_id;
    trip.trip_id = log.trip_id;
    trip.weekday = log.weekday;
    trip.peak = is_peak_clock(log.depart_clock_s, log.weekday);

    size_t drop_count = 0;
    const auto& ev = log.events;
    for (size_t j = 0; j < route.links.size(); ++j) {
        const int stop = static_cast<int>(j) + 1;
        // Locate this stop's passage; events are time-ordered.
        size_t pass = ev.size();
        for (size_t i = 0; i < ev.size(); ++i) {
            if (ev[i].kind == TripEvent::Kind::kStopPassage && ev[i].stop_index == stop) {
                pass = i;
                break;
            }
        }
        if (pass == ev.size()) {
            ++drop_count;
            break;  // sequence integrity lost; keep the prefix
        }
        // Arrival is the first door opening before the next stop passage;
        // doors after the trigger point still belong to this stop. Without
        // any door event the vehicle passed through: use the passage time.
        double arrival = ev[pass].time_s;
        for (size_t i = pass + 1; i < ev.size(); ++i) {
            if (ev[i].kind == TripEvent::Kind::kStopPassage) break;
            if (ev[i].kind == TripEvent::Kind::kDoorOpen) {
                arrival = ev[i].time_s;
                break;
            }
        }
        const Link& link = route.links[j];
        StopRecord rec;
        rec.s_km = link.distance_km;
        rec.t_sched_s = link.sched_travel_s;
        rec.delay_s = arrival - log.sched_arrivals_s[j];
        rec.signal = link.signal ? 1.0 : 0.0;
        rec.t_mean_s = link.mean_travel_s;
        trip.stops.push_back(rec);
        trip.sched_arrivals_s.push_back(log.sched_arrivals_s[j]);
    }
    if (dropped) *dropped += drop_count;
    return trip;
}

std::vector<Trip> simulate_dataset(const SimOptions& opt, uint64_t seed) {
    Network net = generate_network(seed, opt.n_routes, opt.stops_per_route, opt);
    std::vector<Trip> trips;
    for (int day = 0; day < opt.days; ++day) {
        for (const auto& log : simulate_day(net, seed, opt, day)) {
            trips.push_back(extract_delays(log, net));
        }
    }
    if (opt.clip_negative) {
        for (auto& t : trips)
            for (auto& s : t.stops) s.delay_s = std::max(0.0, s.delay_s);
    }
    return trips;
}

}  // namespace arrivalnet
