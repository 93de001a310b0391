#include "runpred/purdy.hpp"

#include <cmath>
#include <istream>

#include <json.hpp>

namespace runpred {

const PurdyTable& PurdyTable::standard() {
    // Anchor velocities reconstructed from period world-record average
    // speeds (see data/purdy_curve.json for the editable copy).
    static const PurdyTable table = [] {
        PurdyTable t;
        t.distances = {100.0, 200.0, 400.0, 800.0, 1500.0, 1609.344, 5000.0, 10000.0, 21097.5, 42195.0};
        t.velocities = {9.80, 9.66, 8.68, 7.29, 6.59, 6.53, 5.83, 5.55, 5.33, 4.79};
        return t;
    }();
    return table;
}

PurdyTable load_purdy_table(std::istream& in) {
    nlohmann::json j = nlohmann::json::parse(in);
    PurdyTable t;
    for (const auto& a : j.at("anchors")) {
        t.distances.push_back(a.at("distance_m").get<double>());
        t.velocities.push_back(a.at("velocity_mps").get<double>());
    }
    if (j.contains("scale")) t.scale = j.at("scale").get<double>();
    if (j.contains("k0")) t.k0 = j.at("k0").get<double>();
    if (j.contains("k1")) t.k1 = j.at("k1").get<double>();
    if (j.contains("standard_points")) t.standard_points = j.at("standard_points").get<double>();
    for (std::size_t i = 1; i < t.distances.size(); ++i) {
        if (t.distances[i] <= t.distances[i - 1]) {
            throw DataError("purdy table: distances must be strictly increasing");
        }
    }
    return t;
}

double PurdyTable::velocity(double distance) const {
    if (distances.empty()) throw DataError("purdy table: empty");
    if (distance < distances.front() || distance > distances.back()) {
        throw DataError("purdy: distance outside table range");
    }
    const double lx = std::log(distance);
    for (std::size_t i = 1; i < distances.size(); ++i) {
        if (distance <= distances[i]) {
            const double l0 = std::log(distances[i - 1]);
            const double l1 = std::log(distances[i]);
            const double w = l1 == l0 ? 0.0 : (lx - l0) / (l1 - l0);
            return velocities[i - 1] + w * (velocities[i] - velocities[i - 1]);
        }
    }
    return velocities.back();
}

double PurdyTable::standard_time(double distance) const { return distance / velocity(distance); }

double purdy_points(double distance, double time_s, const PurdyTable& table) {
    if (!(time_s > 0.0)) throw DataError("purdy: time must be positive");
    const double v = table.velocity(distance);
    const double t_std = distance / v;
    const double k = table.k0 - table.k1 * v;
    if (!(k > 0.0)) throw DataError("purdy: velocity outside model range");
    const double a = table.scale / k;
    const double b = 1.0 - table.standard_points / a;
    return a * (t_std / time_s - b);
}

double predict_purdy(double source_dist, double source_time, double target_dist,
                     const PurdyTable& table, double tol_s) {
    const double target_points = purdy_points(source_dist, source_time, table);

    // Points decrease strictly in time; bracket then bisect.
    double lo = table.standard_time(target_dist) * 0.05;
    double hi = table.standard_time(target_dist);
    if (purdy_points(target_dist, lo, table) < target_points) {
        throw DataError("predict_purdy: source performance above model range");
    }
    int guard = 0;
    while (purdy_points(target_dist, hi, table) > target_points) {
        hi *= 2.0;
        if (++guard > 60) throw DataError("predict_purdy: bisection failed to bracket");
    }
    for (int i = 0; i < 200 && (hi - lo) > tol_s * 0.5; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (purdy_points(target_dist, mid, table) > target_points) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace runpred
