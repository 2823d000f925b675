#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "relay/common.hpp"
#include "relay/recnet.hpp"
#include "relay/taskgen.hpp"

namespace relay::infotheory {

// Discrete joint samples. Variable 0 is X_in (the concept label), variable 1
// is X_out (the network's classification), variables 2.. are the binarized
// node states.
struct DiscreteTrace {
    int n_samples = 0;
    std::vector<int> arity;      // per variable
    std::vector<uint8_t> symbols; // n_samples x n_vars, row-major

    static constexpr int kXin = 0;
    static constexpr int kXout = 1;
    static constexpr int kNodeBase = 2;

    int n_vars() const { return static_cast<int>(arity.size()); }
    int n_nodes() const { return n_vars() - kNodeBase; }
    uint8_t at(int sample, int var) const {
        return symbols[static_cast<size_t>(sample) * arity.size() + var];
    }
    uint8_t& at(int sample, int var) {
        return symbols[static_cast<size_t>(sample) * arity.size() + var];
    }
};

// Binarizes each node's hidden state at `time` at that node's median over
// the dataset (>= median -> 1; zero-variance nodes -> all 0). X_in is the
// chosen concept's label, X_out the sign of the matching output.
DiscreteTrace discretize(const recnet::TraceTensor& trace, int time,
                         const std::vector<taskgen::ConceptLabels>& labels, int concept_idx);

// Plug-in Shannon entropy, base 2, of the empirical joint over `vars`.
double entropy(const DiscreteTrace& trace, std::span<const int> vars);

// I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C). C may be empty.
double conditional_mi(const DiscreteTrace& trace, std::span<const int> a, std::span<const int> b,
                      std::span<const int> c);

// Conditioned co-information of Eq-style relay form:
//   I(X_in; X_out; Y_R | Y_0) = I(X_in; X_out | Y_0) - I(X_in; X_out | Y_R u Y_0).
// relay_nodes and conditioned_nodes are node indices (0-based) and must
// partition the trace's node set. The raw, possibly negative value is
// returned.
double relay_information(const DiscreteTrace& trace, std::span<const int> relay_nodes,
                         std::span<const int> conditioned_nodes);

struct NodeOrdering {
    std::vector<int> removal_order;   // first = least relaying
    std::vector<double> residual_info; // I_R of the set remaining before each removal
    std::vector<double> per_node_loss; // indexed like removal_order
};

// Greedy ordering: start with all nodes relaying; repeatedly move the node
// whose removal keeps the relay information maximal (ties -> lowest index).
// The final surviving node's loss equals its residual.
NodeOrdering greedy_ordering(const DiscreteTrace& trace);

struct RelayMatrix {
    Mat values; // concepts x nodes, bits, clamped to [0,1]
    int time_index = 0;
};

// Per-concept greedy orderings turned into a concepts x nodes grid of
// per-node relayed bits at one time step.
RelayMatrix relay_matrix(const recnet::TraceTensor& trace,
                         const std::vector<taskgen::ConceptLabels>& labels, int time);

// Same, also exposing the per-concept orderings (knockouts reuse them).
RelayMatrix relay_matrix(const recnet::TraceTensor& trace,
                         const std::vector<taskgen::ConceptLabels>& labels, int time,
                         std::array<NodeOrdering, 3>& orderings_out);

// csv: concept,node,bits,time
void write_relay_matrix_csv(const std::string& path, const RelayMatrix& m);
// csv: rank,node,residual_bits,loss_bits
void write_ordering_csv(const std::string& path, const NodeOrdering& ordering);

} // namespace relay::infotheory
