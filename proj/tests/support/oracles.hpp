// Test-side reference implementations, deliberately independent of the
// library code paths they are used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracles {

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations. Slow but
// dependable for the small dense matrices used in tests.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> m) {
    const int n = static_cast<int>(m.size());
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += m[p][q] * m[p][q];
        if (off < 1e-28) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(m[p][q]) < 1e-300) continue;
                const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = m[k][p], mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = m[p][k], mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = m[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

struct QpResult {
    std::vector<double> u;
    double lambda = 0.0;
    double cost = 0.0;
};

// Brute-force minimizer of sum a_i u_i^2 subject to sum u_i = load:
// projected gradient descent on the balance-constraint affine set.
inline QpResult projected_gradient_dispatch(const std::vector<double>& a, double load) {
    const int n = static_cast<int>(a.size());
    if (n == 0) throw std::invalid_argument("empty problem");
    const double amax = *std::max_element(a.begin(), a.end());
    const double eta = 0.45 / amax;

    std::vector<double> u(n, load / n);
    std::vector<double> g(n);
    for (int it = 0; it < 200000; ++it) {
        double mean_g = 0.0;
        for (int i = 0; i < n; ++i) {
            g[i] = 2.0 * a[i] * u[i];
            mean_g += g[i];
        }
        mean_g /= n;
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            const double step = g[i] - mean_g; // projected gradient
            worst = std::max(worst, std::abs(step));
            u[i] -= eta * step;
        }
        if (worst < 1e-14 * std::max(1.0, std::abs(load))) break;
    }
    QpResult res;
    res.u = u;
    double lambda = 0.0;
    for (int i = 0; i < n; ++i) {
        res.cost += a[i] * u[i] * u[i];
        lambda += 2.0 * a[i] * u[i];
    }
    res.lambda = lambda / n;
    return res;
}

// Closed-form frequency response of the bare swing equation to a constant
// load step from rest: f(t) = -(load/D) * (1 - exp(-D t / (2 H))).
inline double swing_step_response(double inertia, double damping, double load, double t) {
    return -(load / damping) * (1.0 - std::exp(-damping * t / (2.0 * inertia)));
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (static_cast<double>(rng() >> 11) * 0x1.0p-53) * (hi - lo);
}

// Random connected graph: random spanning tree plus a few extra edges.
inline std::vector<std::pair<int, int>> random_connected_edges(std::mt19937_64& rng, int n,
                                                               int extra) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; i < n; ++i) {
        const int j = static_cast<int>(rng() % i);
        int a = order[i], b = order[j];
        if (a > b) std::swap(a, b);
        edges.emplace_back(a, b);
    }
    std::sort(edges.begin(), edges.end());
    for (int e = 0; e < extra; ++e) {
        int a = static_cast<int>(rng() % n);
        int b = static_cast<int>(rng() % n);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (std::binary_search(edges.begin(), edges.end(), std::make_pair(a, b))) continue;
        edges.emplace_back(a, b);
        std::sort(edges.begin(), edges.end());
    }
    return edges;
}

} // namespace oracles
