// SPDX-License-Identifier: Apache-2.0
#include "arrivalnet/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "arrivalnet/errors.hpp"

namespace arrivalnet {

namespace {

using nlohmann::json;

Trip parse_trip(const json& j) {
    Trip t;
    t.route_id = j.at("route_id").get<std::string>();
    t.trip_id = j.at("trip_id").get<std::string>();
    const auto& stops = j.at("stops");
    if (!stops.is_array() || stops.empty()) throw FormatError("stops must be a non-empty array");
    for (const auto& s : stops) {
        if (!s.is_object() || s.size() != 5) {
            throw FormatError("stop must carry exactly the 5 channels, got " +
                              std::to_string(s.size()));
        }
        StopRecord r;
        r.s_km = s.at("s_km").get<double>();
        r.t_sched_s = s.at("t_sched_s").get<double>();
        r.delay_s = s.at("delay_s").get<double>();
        const int sig = s.at("signal").get<int>();
        if (sig != 0 && sig != 1) throw FormatError("signal must be 0 or 1");
        r.signal = sig;
        r.t_mean_s = s.at("t_mean_s").get<double>();
        if (!std::isfinite(r.s_km) || !std::isfinite(r.t_sched_s) || !std::isfinite(r.delay_s) ||
            !std::isfinite(r.t_mean_s)) {
            throw FormatError("non-finite stop feature");
        }
        t.stops.push_back(r);
    }
    const int peak = j.at("peak").get<int>();
    const int weekday = j.at("weekday").get<int>();
    if ((peak != 0 && peak != 1) || (weekday != 0 && weekday != 1)) {
        throw FormatError("peak/weekday must be 0 or 1");
    }
    t.peak = peak == 1;
    t.weekday = weekday == 1;
    t.sched_arrivals_s = j.at("sched_arrivals_s").get<std::vector<double>>();
    if (t.sched_arrivals_s.size() != t.stops.size()) {
        throw FormatError("sched_arrivals_s length does not match stops");
    }
    return t;
}

}  // namespace

std::string trip_to_json_line(const Trip& trip) {
    json j;
    j["route_id"] = trip.route_id;
    j["trip_id"] = trip.trip_id;
    json stops = json::array();
    for (const auto& s : trip.stops) {
        stops.push_back({{"s_km", s.s_km},
                         {"t_sched_s", s.t_sched_s},
                         {"delay_s", s.delay_s},
                         {"signal", static_cast<int>(s.signal)},
                         {"t_mean_s", s.t_mean_s}});
    }
    j["stops"] = std::move(stops);
    j["peak"] = trip.peak ? 1 : 0;
    j["weekday"] = trip.weekday ? 1 : 0;
    j["sched_arrivals_s"] = trip.sched_arrivals_s;
    return j.dump();
}

LoadResult load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_dataset: cannot open " + path);
    LoadResult result;
    std::string line;
    size_t line_no = 0, total = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ++total;
        try {
            result.trips.push_back(parse_trip(json::parse(line)));
        } catch (const std::exception& e) {
            ++result.rejected_lines;
            result.diagnostics.push_back("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (total > 0 && result.rejected_lines * 10 > total) {
        throw FormatError("load_dataset: " + std::to_string(result.rejected_lines) + " of " +
                          std::to_string(total) + " lines rejected (over 10%)");
    }
    return result;
}

void save_dataset(const std::vector<Trip>& trips, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_dataset: cannot open " + path + " for writing");
    for (const auto& t : trips) out << trip_to_json_line(t) << '\n';
    if (!out) throw IoError("save_dataset: write failed for " + path);
}

}  // namespace arrivalnet
