#pragma once

#include <iosfwd>
#include <vector>

#include "runpred/table.hpp"

namespace runpred {

// Purdy running-curve scoring. The anchor table holds gun-to-tape standard
// velocities per distance (curve and start costs folded in); points follow
// P = A * (t_std/t - B) with A = scale/(k0 - k1*v) and B chosen so the
// standard time scores `standard_points`.
struct PurdyTable {
    std::vector<double> distances;   // meters, strictly increasing
    std::vector<double> velocities;  // m/s, decreasing beyond sprints
    double scale = 85.0;
    double k0 = 0.0654;
    double k1 = 0.00258;
    double standard_points = 1035.0;

    static const PurdyTable& standard();

    // Velocity interpolated linearly in log-distance.
    double velocity(double distance) const;
    double standard_time(double distance) const;
};

PurdyTable load_purdy_table(std::istream& in);

double purdy_points(double distance, double time_s,
                    const PurdyTable& table = PurdyTable::standard());

// Target-distance time carrying the same points as the source performance,
// found by bisection on the (strictly monotone) points-vs-time map.
double predict_purdy(double source_dist, double source_time, double target_dist,
                     const PurdyTable& table = PurdyTable::standard(), double tol_s = 1e-6);

}  // namespace runpred
