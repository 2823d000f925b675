#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "relay/common.hpp"
#include "relay/infotheory.hpp"

namespace relay::latent {

struct Pca2 {
    Mat projected;  // E x 2
    Mat components; // k x 2, orthonormal columns
    std::array<double, 2> explained_variance{};
};

// Mean-centers and projects onto the top-2 covariance eigenvectors. Sign
// convention: the largest-magnitude entry of each component is positive.
// Throws std::invalid_argument for k < 2 or E < 3, std::domain_error for
// zero total variance.
Pca2 pca2(const Mat& points);

struct ClusterScores {
    double silhouette = 0.0;
    double davies_bouldin = 0.0; // standard orientation: lower is better
    double calinski_harabasz = 0.0;
};

// Standard definitions over Euclidean distance in the given space. Labels
// may take any number >= 2 of distinct values (the per-concept use is
// binary; the full 8-state scoring uses all eight).
ClusterScores cluster_scores(const Mat& points, std::span<const int> labels);

struct RemovalCurve {
    std::vector<int> removed;          // 0..10
    std::vector<ClusterScores> scores; // aligned with `removed`
};

// Removes hidden-state columns least-relaying-first per the ordering,
// recomputing pca2 + cluster_scores against the concept's binary labels
// after each removal count m = 0..10.
RemovalCurve removal_curve(const Mat& states, // E x 12 hidden states at the analysis time
                           const std::vector<taskgen::ConceptLabels>& labels,
                           const infotheory::NodeOrdering& ordering, int concept_idx);

// Same scores under uniformly random removal orders, averaged over
// n_samples draws.
RemovalCurve random_removal_baseline(const Mat& states,
                                     const std::vector<taskgen::ConceptLabels>& labels,
                                     int concept_idx, int n_samples, uint64_t seed);

// csv: concept,removed,order_kind,silhouette,davies_bouldin,calinski_harabasz
void write_removal_curves_csv(const std::string& path,
                              const std::array<RemovalCurve, 3>& targeted,
                              const std::array<RemovalCurve, 3>& random_baseline);

// csv: episode_id,pc1,pc2,state_label
void write_pca_points_csv(const std::string& path, const Pca2& pca,
                          const std::vector<taskgen::ConceptLabels>& labels);

} // namespace relay::latent
