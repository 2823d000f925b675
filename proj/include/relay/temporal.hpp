#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relay/infotheory.hpp"
#include "relay/recnet.hpp"
#include "relay/taskgen.hpp"

namespace relay::temporal {

// One relay matrix per time step t = 0..T-1, with X_out fixed to the
// final-step outputs throughout. All episodes must share one length.
std::vector<infotheory::RelayMatrix> relay_over_time(const recnet::NetworkParams& p,
                                                     const std::vector<taskgen::Episode>& dataset);

std::vector<infotheory::RelayMatrix> relay_over_time(const recnet::TraceTensor& trace,
                                                     const std::vector<taskgen::ConceptLabels>& labels);

// 1-D k-means with k = 2 over all entries, exact optimum via the sorted-split
// scan; the cluster with the larger centroid maps to 1. All-equal input maps
// to all 0.
Mat kmeans2_binarize(const infotheory::RelayMatrix& m);

// Mean Pearson r between flattened matrices at consecutive steps t, t+1 with
// t >= window_start. Pairs where either matrix has zero variance are
// skipped; nullopt when every pair was skipped.
std::optional<double> cross_time_correlation(std::span<const infotheory::RelayMatrix> matrices,
                                             int window_start);

// Mean Jaccard overlap of the binarized per-concept node sets between
// consecutive steps in the window; a both-empty pair counts 1.0.
std::optional<double> information_overlap(std::span<const infotheory::RelayMatrix> matrices,
                                          int window_start);

struct UsageHistograms {
    std::array<double, 4> concepts_per_node{};  // fraction of nodes relaying 0..3 concepts
    std::array<double, 13> nodes_per_concept{}; // fraction of concepts relayed by 0..12 nodes
};

UsageHistograms usage_histograms(const Mat& binary);

// long csv: t,concept,node,bits,binary
void write_relay_over_time_csv(const std::string& path,
                               std::span<const infotheory::RelayMatrix> matrices);

} // namespace relay::temporal
