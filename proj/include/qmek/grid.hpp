#pragma once

#include <stdexcept>
#include <vector>

namespace qmek {

// Uniform time grid on [0, t_max]: t_k = k * step, step = t_max / (n_points - 1).
struct TimeGrid {
    double t_max{1.0}; // end of the window
    int n_points{101}; // number of nodes, >= 3

    TimeGrid() = default;

    TimeGrid(double t_max_, int n_points_) : t_max(t_max_), n_points(n_points_) {
        if (!(t_max > 0.0))
            throw std::invalid_argument("TimeGrid: t_max must be positive");
        if (n_points < 3)
            throw std::invalid_argument("TimeGrid: need at least 3 points");
    }

    double step() const { return t_max / (n_points - 1); }
    double node(int k) const { return k * step(); }

    std::vector<double> nodes() const {
        std::vector<double> t(n_points);
        for (int k = 0; k < n_points; ++k) t[k] = node(k);
        return t;
    }

    bool operator==(const TimeGrid& other) const {
        return t_max == other.t_max && n_points == other.n_points;
    }
};

} // namespace qmek
