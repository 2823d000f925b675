#include "relay/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace relay::temporal {

std::vector<infotheory::RelayMatrix> relay_over_time(
    const recnet::TraceTensor& trace, const std::vector<taskgen::ConceptLabels>& labels) {
    std::vector<infotheory::RelayMatrix> out;
    out.reserve(trace.n_steps);
    for (int t = 0; t < trace.n_steps; ++t)
        out.push_back(infotheory::relay_matrix(trace, labels, t));
    return out;
}

std::vector<infotheory::RelayMatrix> relay_over_time(
    const recnet::NetworkParams& p, const std::vector<taskgen::Episode>& dataset) {
    const recnet::TraceTensor trace = recnet::record_traces(p, dataset);
    std::vector<taskgen::ConceptLabels> labels;
    labels.reserve(dataset.size());
    for (const auto& ep : dataset) labels.push_back(ep.labels);
    return relay_over_time(trace, labels);
}

Mat kmeans2_binarize(const infotheory::RelayMatrix& m) {
    const int rows = m.values.rows, cols = m.values.cols;
    Mat out(rows, cols);
    std::vector<double> sorted = m.values.data;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    if (sorted.front() == sorted.back()) return out; // degenerate: all equal -> all 0

    // prefix sums give each candidate split's within-cluster SSE in O(1)
    std::vector<double> pre(n + 1, 0.0), pre2(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
        pre[i + 1] = pre[i] + sorted[i];
        pre2[i + 1] = pre2[i] + sorted[i] * sorted[i];
    }
    auto sse = [&](size_t lo, size_t hi) { // [lo, hi)
        const double cnt = static_cast<double>(hi - lo);
        const double sum = pre[hi] - pre[lo];
        return (pre2[hi] - pre2[lo]) - sum * sum / cnt;
    };

    size_t best_split = 1;
    double best = std::numeric_limits<double>::infinity();
    for (size_t s = 1; s < n; ++s) {
        if (sorted[s - 1] == sorted[s]) continue; // the optimum never splits ties
        const double total = sse(0, s) + sse(s, n);
        if (total < best) {
            best = total;
            best_split = s;
        }
    }
    // values >= the lower edge of the upper cluster belong to it; the upper
    // cluster has the larger centroid by construction
    const double threshold = sorted[best_split];
    for (size_t i = 0; i < m.values.data.size(); ++i)
        out.data[i] = m.values.data[i] >= threshold ? 1.0 : 0.0;
    return out;
}

namespace {

std::optional<double> pearson(const Mat& x, const Mat& y) {
    const size_t n = x.data.size();
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x.data[i];
        my += y.data[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x.data[i] - mx, dy = y.data[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

void check_window(size_t count, int window_start) {
    if (window_start < 0) throw std::invalid_argument("window_start must be >= 0");
    if (count < static_cast<size_t>(window_start) + 2)
        throw std::invalid_argument("window must contain at least 2 matrices");
}

} // namespace

std::optional<double> cross_time_correlation(std::span<const infotheory::RelayMatrix> matrices,
                                             int window_start) {
    check_window(matrices.size(), window_start);
    double sum = 0.0;
    int used = 0;
    for (size_t t = window_start; t + 1 < matrices.size(); ++t) {
        const auto r = pearson(matrices[t].values, matrices[t + 1].values);
        if (r) {
            sum += *r;
            ++used;
        }
    }
    if (used == 0) return std::nullopt;
    return sum / used;
}

std::optional<double> information_overlap(std::span<const infotheory::RelayMatrix> matrices,
                                          int window_start) {
    check_window(matrices.size(), window_start);
    std::vector<Mat> bin;
    bin.reserve(matrices.size() - window_start);
    for (size_t t = window_start; t < matrices.size(); ++t)
        bin.push_back(kmeans2_binarize(matrices[t]));

    double sum = 0.0;
    int used = 0;
    for (size_t t = 0; t + 1 < bin.size(); ++t) {
        for (int c = 0; c < bin[t].rows; ++c) {
            int inter = 0, uni = 0;
            for (int j = 0; j < bin[t].cols; ++j) {
                const bool a = bin[t](c, j) > 0.5, b = bin[t + 1](c, j) > 0.5;
                inter += a && b;
                uni += a || b;
            }
            sum += uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
            ++used;
        }
    }
    if (used == 0) return std::nullopt;
    return sum / used;
}

UsageHistograms usage_histograms(const Mat& binary) {
    if (binary.rows != 3 || binary.cols != recnet::kHidden)
        throw std::invalid_argument("expected a 3 x 12 binary matrix");
    UsageHistograms h;
    for (int j = 0; j < binary.cols; ++j) {
        int cnt = 0;
        for (int c = 0; c < binary.rows; ++c) cnt += binary(c, j) > 0.5;
        h.concepts_per_node[cnt] += 1.0 / binary.cols;
    }
    for (int c = 0; c < binary.rows; ++c) {
        int cnt = 0;
        for (int j = 0; j < binary.cols; ++j) cnt += binary(c, j) > 0.5;
        h.nodes_per_concept[cnt] += 1.0 / binary.rows;
    }
    return h;
}

void write_relay_over_time_csv(const std::string& path,
                               std::span<const infotheory::RelayMatrix> matrices) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "t,concept,node,bits,binary\n";
    for (const auto& m : matrices) {
        const Mat bin = kmeans2_binarize(m);
        for (int c = 0; c < m.values.rows; ++c)
            for (int j = 0; j < m.values.cols; ++j)
                f << m.time_index << ',' << c << ',' << j << ','
                  << format_double(m.values(c, j)) << ',' << (bin(c, j) > 0.5 ? 1 : 0) << '\n';
    }
}

} // namespace relay::temporal
