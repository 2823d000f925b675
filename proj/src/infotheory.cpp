#include "relay/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace relay::infotheory {

DiscreteTrace discretize(const recnet::TraceTensor& trace, int time,
                         const std::vector<taskgen::ConceptLabels>& labels, int concept_idx) {
    if (time < 0 || time >= trace.n_steps) throw std::invalid_argument("time out of range");
    if (concept_idx < 0 || concept_idx > 2) throw std::invalid_argument("concept index out of range");
    if (static_cast<int>(labels.size()) != trace.n_episodes)
        throw std::invalid_argument("labels size does not match trace");

    const int n = trace.n_episodes;
    const int nodes = recnet::kHidden;

    DiscreteTrace dt;
    dt.n_samples = n;
    dt.arity.assign(DiscreteTrace::kNodeBase + nodes, 2);
    dt.symbols.assign(static_cast<size_t>(n) * dt.arity.size(), 0);

    for (int e = 0; e < n; ++e) {
        dt.at(e, DiscreteTrace::kXin) = labels[e][concept_idx] > 0 ? 1 : 0;
        dt.at(e, DiscreteTrace::kXout) = trace.outputs(e, concept_idx) > 0.0 ? 1 : 0;
    }

    std::vector<double> column(n);
    for (int j = 0; j < nodes; ++j) {
        for (int e = 0; e < n; ++e) column[e] = trace.hidden[e](time, j);
        auto [mn, mx] = std::minmax_element(column.begin(), column.end());
        if (*mn == *mx) continue; // constant node stays all-0
        std::vector<double> sorted = column;
        std::sort(sorted.begin(), sorted.end());
        const double median = n % 2 == 1 ? sorted[n / 2]
                                         : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        for (int e = 0; e < n; ++e)
            dt.at(e, DiscreteTrace::kNodeBase + j) = column[e] >= median ? 1 : 0;
    }
    return dt;
}

double entropy(const DiscreteTrace& trace, std::span<const int> vars) {
    if (trace.n_samples <= 0) throw std::invalid_argument("empty trace");
    if (vars.empty()) return 0.0;

    size_t cells = 1;
    for (int v : vars) {
        if (v < 0 || v >= trace.n_vars()) throw std::invalid_argument("variable index out of range");
        cells *= static_cast<size_t>(trace.arity[v]);
    }

    std::vector<int> counts(cells, 0);
    for (int e = 0; e < trace.n_samples; ++e) {
        size_t key = 0;
        for (int v : vars) key = key * trace.arity[v] + trace.at(e, v);
        ++counts[key];
    }

    const double n = static_cast<double>(trace.n_samples);
    double h = 0.0;
    for (int c : counts) {
        if (c == 0) continue;
        const double p = c / n;
        h -= p * std::log2(p);
    }
    return h;
}

double conditional_mi(const DiscreteTrace& trace, std::span<const int> a, std::span<const int> b,
                      std::span<const int> c) {
    std::vector<int> ac(a.begin(), a.end());
    ac.insert(ac.end(), c.begin(), c.end());
    std::vector<int> bc(b.begin(), b.end());
    bc.insert(bc.end(), c.begin(), c.end());
    std::vector<int> abc(a.begin(), a.end());
    abc.insert(abc.end(), b.begin(), b.end());
    abc.insert(abc.end(), c.begin(), c.end());
    return entropy(trace, ac) + entropy(trace, bc) - entropy(trace, abc) -
           entropy(trace, std::span<const int>(c));
}

namespace {

std::vector<int> node_columns(const DiscreteTrace& trace, std::span<const int> nodes) {
    std::vector<int> cols;
    cols.reserve(nodes.size());
    for (int n : nodes) {
        if (n < 0 || n >= trace.n_nodes()) throw std::invalid_argument("node index out of range");
        cols.push_back(DiscreteTrace::kNodeBase + n);
    }
    return cols;
}

double relay_from_columns(const DiscreteTrace& trace, const std::vector<int>& yr_cols,
                          const std::vector<int>& y0_cols) {
    static constexpr int xin[] = {DiscreteTrace::kXin};
    static constexpr int xout[] = {DiscreteTrace::kXout};
    std::vector<int> all_cols = yr_cols;
    all_cols.insert(all_cols.end(), y0_cols.begin(), y0_cols.end());
    return conditional_mi(trace, xin, xout, y0_cols) - conditional_mi(trace, xin, xout, all_cols);
}

} // namespace

double relay_information(const DiscreteTrace& trace, std::span<const int> relay_nodes,
                         std::span<const int> conditioned_nodes) {
    std::vector<char> seen(trace.n_nodes(), 0);
    size_t total = 0;
    for (auto nodes : {relay_nodes, conditioned_nodes})
        for (int n : nodes) {
            if (n < 0 || n >= trace.n_nodes())
                throw std::invalid_argument("node index out of range");
            if (seen[n]) throw std::invalid_argument("relay and conditioned sets overlap");
            seen[n] = 1;
            ++total;
        }
    if (total != static_cast<size_t>(trace.n_nodes()))
        throw std::invalid_argument("relay and conditioned sets must cover all nodes");

    return relay_from_columns(trace, node_columns(trace, relay_nodes),
                              node_columns(trace, conditioned_nodes));
}

NodeOrdering greedy_ordering(const DiscreteTrace& trace) {
    const int n = trace.n_nodes();
    if (n < 1) throw std::invalid_argument("trace has no nodes");

    std::vector<int> relaying(n);
    for (int i = 0; i < n; ++i) relaying[i] = i;
    std::vector<int> conditioned;

    NodeOrdering ord;
    ord.removal_order.reserve(n);
    ord.residual_info.reserve(n);
    ord.per_node_loss.reserve(n);

    double current = relay_from_columns(trace, node_columns(trace, relaying),
                                        node_columns(trace, conditioned));

    while (relaying.size() > 1) {
        ord.residual_info.push_back(current);
        double best_residual = 0.0;
        int best_idx = -1;
        for (size_t k = 0; k < relaying.size(); ++k) {
            std::vector<int> rest;
            rest.reserve(relaying.size() - 1);
            for (size_t j = 0; j < relaying.size(); ++j)
                if (j != k) rest.push_back(relaying[j]);
            std::vector<int> cond = conditioned;
            cond.push_back(relaying[k]);
            const double residual = relay_from_columns(trace, node_columns(trace, rest),
                                                       node_columns(trace, cond));
            // strict > keeps the lowest node index on ties (relaying is ascending)
            if (best_idx < 0 || residual > best_residual) {
                best_residual = residual;
                best_idx = static_cast<int>(k);
            }
        }
        const int node = relaying[best_idx];
        ord.removal_order.push_back(node);
        ord.per_node_loss.push_back(current - best_residual);
        conditioned.push_back(node);
        std::sort(conditioned.begin(), conditioned.end());
        relaying.erase(relaying.begin() + best_idx);
        current = best_residual;
    }

    // The last node is never removed: its residual is what the full set
    // still relays through it, and removing it would leave exactly 0.
    ord.removal_order.push_back(relaying.front());
    ord.residual_info.push_back(current);
    ord.per_node_loss.push_back(current);
    return ord;
}

RelayMatrix relay_matrix(const recnet::TraceTensor& trace,
                         const std::vector<taskgen::ConceptLabels>& labels, int time,
                         std::array<NodeOrdering, 3>& orderings_out) {
    RelayMatrix m;
    m.values = Mat(3, recnet::kHidden);
    m.time_index = time;
    for (int c = 0; c < 3; ++c) {
        const DiscreteTrace dt = discretize(trace, time, labels, c);
        orderings_out[c] = greedy_ordering(dt);
        const NodeOrdering& ord = orderings_out[c];
        for (size_t k = 0; k < ord.removal_order.size(); ++k) {
            const double v = std::clamp(ord.per_node_loss[k], 0.0, 1.0);
            m.values(c, ord.removal_order[k]) = v;
        }
    }
    return m;
}

RelayMatrix relay_matrix(const recnet::TraceTensor& trace,
                         const std::vector<taskgen::ConceptLabels>& labels, int time) {
    std::array<NodeOrdering, 3> unused;
    return relay_matrix(trace, labels, time, unused);
}

void write_relay_matrix_csv(const std::string& path, const RelayMatrix& m) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "concept,node,bits,time\n";
    for (int c = 0; c < m.values.rows; ++c)
        for (int j = 0; j < m.values.cols; ++j)
            f << c << ',' << j << ',' << format_double(m.values(c, j)) << ',' << m.time_index
              << '\n';
}

void write_ordering_csv(const std::string& path, const NodeOrdering& ordering) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "rank,node,residual_bits,loss_bits\n";
    for (size_t k = 0; k < ordering.removal_order.size(); ++k)
        f << k << ',' << ordering.removal_order[k] << ','
          << format_double(ordering.residual_info[k]) << ','
          << format_double(ordering.per_node_loss[k]) << '\n';
}

} // namespace relay::infotheory
