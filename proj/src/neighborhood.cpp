#include "lmfrank/neighborhood.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>

#include "lmfrank/error.hpp"

namespace lmfrank {

KnnAdjacency build_knn(const SimilarityStore& sim, std::size_t k) {
    const std::size_t m = sim.entity_count();
    if (k < 1) {
        throw InputError("neighbor count k must be at least 1");
    }
    if (k >= m) {
        throw InputError("neighbor count k=" + std::to_string(k) + " must be below the entity count " +
                         std::to_string(m));
    }
    KnnAdjacency adj;
    adj.m = m;
    adj.k = k;
    adj.tag = sim.tag();
    adj.rows.resize(m);
    std::vector<Partner> candidates;
    for (EntityId i = 0; i < m; ++i) {
        candidates.clear();
        for (const Partner& p : sim.neighbors(i)) {
            if (p.value > 0.0) {
                candidates.push_back(p);
            }
        }
        const auto better = [](const Partner& x, const Partner& y) {
            return x.value != y.value ? x.value > y.value : x.id < y.id;
        };
        const std::size_t keep = std::min(k, candidates.size());
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                          candidates.end(), better);
        adj.rows[i].assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    return adj;
}

GraphLaplacian::GraphLaplacian(const KnnAdjacency& adj) {
    const auto m = static_cast<Eigen::Index>(adj.m);
    degrees_ = Eigen::VectorXd::Zero(m);
    std::vector<Eigen::Triplet<double>> triplets;
    for (EntityId i = 0; i < adj.m; ++i) {
        for (const Partner& p : adj.rows[i]) {
            // a_ij lands in both (i,j) and (j,i) of A + A^T.
            triplets.emplace_back(i, p.id, -p.value);
            triplets.emplace_back(p.id, i, -p.value);
            degrees_[i] += p.value;
            degrees_[p.id] += p.value;
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (degrees_[i] != 0.0) {
            triplets.emplace_back(i, i, degrees_[i]);
        }
    }
    matrix_.resize(m, m);
    matrix_.setFromTriplets(triplets.begin(), triplets.end());
    matrix_.makeCompressed();
}

double quad_form(const GraphLaplacian& lap, const Matrix& latent) {
    if (static_cast<std::size_t>(latent.rows()) != lap.size()) {
        throw InputError("latent matrix has " + std::to_string(latent.rows()) +
                         " rows, Laplacian has " + std::to_string(lap.size()));
    }
    const Matrix lu = lap.matrix() * latent;
    return 0.5 * latent.cwiseProduct(lu).sum();
}

void write_adjacency(const std::filesystem::path& path, const KnnAdjacency& adj,
                     const EntityIndex& index) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
    out << "# k-NN adjacency " << adj.tag << " k=" << adj.k << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (EntityId i = 0; i < adj.m; ++i) {
        for (const Partner& p : adj.rows[i]) {
            out << index.name(i) << '\t' << index.name(p.id) << '\t' << p.value << '\n';
        }
    }
}

}  // namespace lmfrank
