#pragma once

// k-nearest-neighbor adjacency over a similarity source and the graph
// Laplacian L = D - (A + A^T) built from it.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "lmfrank/data.hpp"

namespace lmfrank {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Directed adjacency: row i lists the chosen neighbors of i with their similarity.
struct KnnAdjacency {
    std::size_t m = 0;
    std::size_t k = 0;
    std::string tag;
    std::vector<std::vector<Partner>> rows;
};

// Row i keeps the k highest positive similarities of i (ties to the smaller
// id). Throws InputError unless 1 <= k < m.
KnnAdjacency build_knn(const SimilarityStore& sim, std::size_t k);

class GraphLaplacian {
public:
    GraphLaplacian() = default;
    explicit GraphLaplacian(const KnnAdjacency& adj);

    std::size_t size() const { return static_cast<std::size_t>(matrix_.rows()); }
    const SparseMatrix& matrix() const { return matrix_; }
    const Eigen::VectorXd& degrees() const { return degrees_; }

private:
    SparseMatrix matrix_;
    Eigen::VectorXd degrees_;
};

inline GraphLaplacian laplacian(const KnnAdjacency& adj) { return GraphLaplacian(adj); }

// 1/2 tr(U^T L U). Throws InputError on a row-count mismatch.
double quad_form(const GraphLaplacian& lap, const Matrix& latent);

// Debug dump of the directed adjacency in the triplet format.
void write_adjacency(const std::filesystem::path& path, const KnnAdjacency& adj,
                     const EntityIndex& index);

}  // namespace lmfrank
