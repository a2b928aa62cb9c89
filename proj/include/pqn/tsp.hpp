#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqn/rng.hpp"

namespace pqn {

struct InvalidTour : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Symmetric TSP instance: an n x n cost matrix with zero diagonal and
/// positive off-diagonal entries, optionally backed by planar coordinates
/// in the unit square. Instances with coordinates keep costs equal to the
/// pairwise Euclidean distances; perturbed instances drop the coordinates.
struct TspInstance {
    int n = 0;
    std::vector<double> costs; // row-major n*n
    std::optional<std::vector<std::array<double, 2>>> coords;

    double cost(int i, int j) const { return costs[static_cast<std::size_t>(i) * n + j]; }
    double& cost(int i, int j) { return costs[static_cast<std::size_t>(i) * n + j]; }

    /// Checks the structural invariants, throwing std::invalid_argument
    /// naming the first violated property.
    void validate() const {
        if (n < 2)
            throw std::invalid_argument("TspInstance: n must be at least 2");
        if (costs.size() != static_cast<std::size_t>(n) * n)
            throw std::invalid_argument("TspInstance: costs must be an n x n matrix");
        for (int i = 0; i < n; ++i) {
            if (cost(i, i) != 0.0)
                throw std::invalid_argument("TspInstance: diagonal costs must be zero");
            for (int j = 0; j < n; ++j) {
                double c = cost(i, j);
                if (!std::isfinite(c))
                    throw std::invalid_argument("TspInstance: costs must be finite");
                if (i != j && c <= 0.0)
                    throw std::invalid_argument("TspInstance: off-diagonal costs must be positive");
                if (c != cost(j, i))
                    throw std::invalid_argument("TspInstance: costs must be symmetric");
            }
        }
        if (coords) {
            if (coords->size() != static_cast<std::size_t>(n))
                throw std::invalid_argument("TspInstance: coords must have one row per city");
            for (const auto& p : *coords)
                if (p[0] < 0.0 || p[0] > 1.0 || p[1] < 0.0 || p[1] > 1.0)
                    throw std::invalid_argument("TspInstance: coords must lie in the unit square");
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double dx = (*coords)[i][0] - (*coords)[j][0];
                    double dy = (*coords)[i][1] - (*coords)[j][1];
                    if (std::abs(cost(i, j) - std::sqrt(dx * dx + dy * dy)) > 1e-12)
                        throw std::invalid_argument(
                            "TspInstance: costs must match Euclidean distances of coords");
                }
        }
    }
};

/// A tour is a permutation of 0..n-1; order[0] is the designated start city
/// and the closing edge back to it is implicit.
struct Tour {
    std::vector<int> order;

    int start() const { return order.empty() ? -1 : order.front(); }
};

struct TourValidation {
    bool ok = true;
    bool length_mismatch = false;
    std::vector<int> duplicated;
    std::vector<int> missing;
    std::vector<int> out_of_range;
    std::string message;
};

/// Checks that the tour is a permutation of 0..n-1. Returns a report naming
/// duplicated/missing cities instead of throwing.
inline TourValidation validate_tour(const TspInstance& instance, const Tour& tour) {
    TourValidation report;
    std::ostringstream msg;
    if (tour.order.size() != static_cast<std::size_t>(instance.n)) {
        report.length_mismatch = true;
        report.ok = false;
        msg << "length mismatch: got " << tour.order.size() << ", expected " << instance.n << "; ";
    }
    std::vector<int> counts(instance.n, 0);
    for (int city : tour.order) {
        if (city < 0 || city >= instance.n) {
            report.out_of_range.push_back(city);
            report.ok = false;
        } else {
            ++counts[city];
        }
    }
    for (int city = 0; city < instance.n; ++city) {
        if (counts[city] > 1)
            report.duplicated.push_back(city);
        if (counts[city] == 0)
            report.missing.push_back(city);
    }
    if (!report.duplicated.empty() || !report.missing.empty())
        report.ok = false;
    if (!report.out_of_range.empty()) {
        msg << "out-of-range cities:";
        for (int c : report.out_of_range)
            msg << ' ' << c;
        msg << "; ";
    }
    if (!report.duplicated.empty()) {
        msg << "duplicated cities:";
        for (int c : report.duplicated)
            msg << ' ' << c;
        msg << "; ";
    }
    if (!report.missing.empty()) {
        msg << "missing cities:";
        for (int c : report.missing)
            msg << ' ' << c;
        msg << "; ";
    }
    report.message = report.ok ? "ok" : msg.str();
    return report;
}

/// Generates a random Euclidean instance: coords uniform in [0,1]^2, costs
/// the pairwise distances. Deterministic given (n, seed).
inline TspInstance generate_instance(int n, std::uint64_t seed) {
    if (n < 2)
        throw std::invalid_argument("generate_instance: n must be at least 2");
    Rng rng(seed);
    TspInstance instance;
    instance.n = n;
    std::vector<std::array<double, 2>> coords(n);
    for (auto& p : coords) {
        p[0] = rng.uniform();
        p[1] = rng.uniform();
    }
    instance.costs.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double dx = coords[i][0] - coords[j][0];
            double dy = coords[i][1] - coords[j][1];
            double d = std::sqrt(dx * dx + dy * dy);
            instance.cost(i, j) = d;
            instance.cost(j, i) = d;
        }
    instance.coords = std::move(coords);
    return instance;
}

/// Total cost of the closed tour: consecutive edges plus the closing edge
/// back to order[0]. Throws InvalidTour if the tour is not a permutation.
inline double tour_cost(const TspInstance& instance, const Tour& tour) {
    TourValidation report = validate_tour(instance, tour);
    if (!report.ok)
        throw InvalidTour("tour_cost: " + report.message);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < tour.order.size(); ++i)
        total += instance.cost(tour.order[i], tour.order[i + 1]);
    total += instance.cost(tour.order.back(), tour.order.front());
    return total;
}

/// Multiplies every undirected edge cost by an independent draw from
/// U(alpha, beta); one draw per unordered pair keeps the matrix symmetric.
/// Coordinates are dropped because the result is no longer Euclidean.
inline TspInstance perturb_instance(const TspInstance& instance, double alpha, double beta,
                                    std::uint64_t seed) {
    if (!(alpha > 0.0) || !(alpha <= beta))
        throw std::invalid_argument("perturb_instance: need 0 < alpha <= beta");
    Rng rng(seed);
    TspInstance out;
    out.n = instance.n;
    out.costs.assign(instance.costs.size(), 0.0);
    for (int i = 0; i < instance.n; ++i)
        for (int j = i + 1; j < instance.n; ++j) {
            double scaled = instance.cost(i, j) * rng.uniform(alpha, beta);
            out.cost(i, j) = scaled;
            out.cost(j, i) = scaled;
        }
    return out;
}

} // namespace pqn
