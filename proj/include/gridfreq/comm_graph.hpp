#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gridfreq {

/// Undirected communication topology between the resources of one area.
/// No self loops, no duplicate edges, node ids in [0, n).
class CommGraph {
public:
    CommGraph() = default;

    CommGraph(int n, std::vector<std::pair<int, int>> edges) : n_(n) {
        if (n < 1) throw std::invalid_argument("graph needs at least one node");
        adj_.resize(n);
        for (auto [a, b] : edges) {
            if (a == b) throw std::invalid_argument("self loops are not allowed");
            if (a < 0 || b < 0 || a >= n || b >= n)
                throw std::invalid_argument("edge endpoint out of range");
            if (a > b) std::swap(a, b);
            edges_.emplace_back(a, b);
        }
        std::sort(edges_.begin(), edges_.end());
        if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
            throw std::invalid_argument("duplicate edge");
        for (auto [a, b] : edges_) {
            adj_[a].push_back(b);
            adj_[b].push_back(a);
        }
        for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
    }

    static CommGraph complete(int n) {
        std::vector<std::pair<int, int>> e;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
        return CommGraph(n, std::move(e));
    }

    int size() const { return n_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int i) const { return adj_[i]; }
    int degree(int i) const { return static_cast<int>(adj_[i].size()); }

    bool connected() const {
        std::vector<char> seen(n_, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w : adj_[v])
                if (!seen[w]) {
                    seen[w] = 1;
                    ++count;
                    stack.push_back(w);
                }
        }
        return count == n_;
    }

private:
    int n_ = 0;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> adj_;
};

/// Ring where node i is linked to i+-1, ..., i+-k/2 (mod n).
/// k must be even and smaller than n.
inline CommGraph build_k_neighbor_ring(int n, int k) {
    if (n < 2) throw std::invalid_argument("k-neighbor ring needs n >= 2");
    if (k < 2 || k % 2 != 0) throw std::invalid_argument("links per node k must be even and >= 2");
    if (k >= n) throw std::invalid_argument("links per node k must be smaller than n");
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
        for (int d = 1; d <= k / 2; ++d) {
            int j = (i + d) % n;
            if (i < j)
                e.emplace_back(i, j);
            else
                e.emplace_back(j, i);
        }
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return CommGraph(n, std::move(e));
}

/// Plain cycle: one neighbor per side.
inline CommGraph build_ring(int n) { return build_k_neighbor_ring(n, 2); }

/// Laplacian L = degree matrix - adjacency matrix.
inline Eigen::MatrixXd laplacian(const CommGraph& g) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(g.size(), g.size());
    for (auto [a, b] : g.edges()) {
        L(a, b) -= 1.0;
        L(b, a) -= 1.0;
        L(a, a) += 1.0;
        L(b, b) += 1.0;
    }
    return L;
}

/// Spectral feasibility of the consensus iteration for a given gain and
/// cost curvature vector.
struct SpectralReport {
    double second_largest = 0.0; // second largest eigenvalue of the iteration matrix
    double gamma = 0.0;          // contraction factor: second_largest * sqrt(max a / min a)
    bool connected = false;
    bool satisfied = false;      // gamma < 1, connected, spectrum inside [0, 1]
};

/// Evaluates the consensus iteration matrix I - beta * W^-1 * L with
/// W = diag(1/(2 a_i)) through its symmetric similar form
/// I - beta * W^-1/2 L W^-1/2, whose spectrum is real. The largest
/// eigenvalue is always exactly 1; contraction on the complementary
/// subspace requires the rest of the spectrum in [0, 1) and a spread
/// margin on the cost curvatures.
inline SpectralReport check_condition(const CommGraph& g, double beta,
                                      const std::vector<double>& cost_quad) {
    if (static_cast<int>(cost_quad.size()) != g.size())
        throw std::invalid_argument("one cost curvature per graph node required");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    for (double a : cost_quad)
        if (!(a > 0.0)) throw std::invalid_argument("cost curvatures must be > 0");

    const int n = g.size();
    SpectralReport rep;
    rep.connected = g.connected();

    const auto [amin_it, amax_it] = std::minmax_element(cost_quad.begin(), cost_quad.end());
    const double spread = std::sqrt(*amax_it / *amin_it);

    if (n == 1) {
        rep.second_largest = 0.0;
        rep.gamma = 0.0;
        rep.satisfied = true;
        return rep;
    }

    // I - beta * W^-1/2 L W^-1/2 with W^-1/2 = diag(sqrt(2 a_i))
    Eigen::MatrixXd m = -laplacian(g);
    for (int i = 0; i < n; ++i) {
        const double si = std::sqrt(2.0 * cost_quad[i]);
        for (int j = 0; j < n; ++j) m(i, j) *= beta * si * std::sqrt(2.0 * cost_quad[j]);
    }
    m.diagonal().array() += 1.0;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("symmetric eigensolve failed");
    const auto& evs = solver.eigenvalues(); // ascending

    rep.second_largest = evs(n - 2);
    rep.gamma = rep.second_largest * spread;
    constexpr double kEigTol = 1e-10;
    rep.satisfied = rep.connected && rep.gamma < 1.0 && evs(0) >= -kEigTol;
    return rep;
}

} // namespace gridfreq
