#include "relay/latent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

namespace relay::latent {

namespace {

// cyclic Jacobi on a symmetric matrix; returns eigenvalues, fills V with
// eigenvectors in columns
std::vector<double> jacobi_eigen(Mat a, Mat& v) {
    const int n = a.rows;
    v = Mat(n, n);
    for (int i = 0; i < n; ++i) v(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-24) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = a(i, i);
    return eig;
}

} // namespace

Pca2 pca2(const Mat& points) {
    const int e = points.rows, k = points.cols;
    if (k < 2) throw std::invalid_argument("pca2 needs at least 2 dimensions");
    if (e < 3) throw std::invalid_argument("pca2 needs at least 3 points");

    std::vector<double> mean(k, 0.0);
    for (int i = 0; i < e; ++i)
        for (int j = 0; j < k; ++j) mean[j] += points(i, j);
    for (double& m : mean) m /= e;

    bool any_variation = false;
    for (int j = 0; j < k && !any_variation; ++j)
        for (int i = 1; i < e; ++i)
            if (points(i, j) != points(0, j)) {
                any_variation = true;
                break;
            }
    if (!any_variation) throw std::domain_error("pca2: zero total variance");

    Mat cov(k, k);
    for (int i = 0; i < e; ++i)
        for (int r = 0; r < k; ++r) {
            const double dr = points(i, r) - mean[r];
            for (int c = r; c < k; ++c) cov(r, c) += dr * (points(i, c) - mean[c]);
        }
    double total_var = 0.0;
    for (int r = 0; r < k; ++r) {
        for (int c = r; c < k; ++c) {
            cov(r, c) /= (e - 1);
            cov(c, r) = cov(r, c);
        }
        total_var += cov(r, r);
    }
    if (total_var == 0.0) throw std::domain_error("pca2: zero total variance");

    Mat vecs;
    std::vector<double> vals = jacobi_eigen(cov, vecs);

    std::array<int, 2> top{0, 1};
    for (int i = 0; i < k; ++i) {
        if (vals[i] > vals[top[0]]) {
            top[1] = top[0];
            top[0] = i;
        } else if (i != top[0] && vals[i] > vals[top[1]]) {
            top[1] = i;
        }
    }

    Pca2 out;
    out.components = Mat(k, 2);
    for (int c = 0; c < 2; ++c) {
        int arg = 0;
        for (int r = 1; r < k; ++r)
            if (std::abs(vecs(r, top[c])) > std::abs(vecs(arg, top[c]))) arg = r;
        const double sign = vecs(arg, top[c]) >= 0.0 ? 1.0 : -1.0;
        for (int r = 0; r < k; ++r) out.components(r, c) = sign * vecs(r, top[c]);
        out.explained_variance[c] = std::max(vals[top[c]], 0.0);
    }

    out.projected = Mat(e, 2);
    for (int i = 0; i < e; ++i)
        for (int c = 0; c < 2; ++c) {
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += (points(i, j) - mean[j]) * out.components(j, c);
            out.projected(i, c) = acc;
        }
    return out;
}

ClusterScores cluster_scores(const Mat& points, std::span<const int> labels) {
    const int e = points.rows, d = points.cols;
    if (static_cast<size_t>(e) != labels.size())
        throw std::invalid_argument("labels size does not match points");

    std::map<int, int> cluster_of; // label value -> cluster id
    for (int lab : labels)
        cluster_of.emplace(lab, static_cast<int>(cluster_of.size()));
    const int kc = static_cast<int>(cluster_of.size());
    if (kc < 2) throw std::invalid_argument("cluster scores need at least 2 distinct labels");
    if (e <= kc) throw std::invalid_argument("more clusters than points");

    std::vector<int> cid(e);
    std::vector<int> count(kc, 0);
    for (int i = 0; i < e; ++i) {
        cid[i] = cluster_of[labels[i]];
        ++count[cid[i]];
    }

    auto dist = [&](int i, int j) {
        double s = 0.0;
        for (int c = 0; c < d; ++c) {
            const double diff = points(i, c) - points(j, c);
            s += diff * diff;
        }
        return std::sqrt(s);
    };

    // silhouette
    double sil = 0.0;
    std::vector<double> dsum(kc);
    for (int i = 0; i < e; ++i) {
        std::fill(dsum.begin(), dsum.end(), 0.0);
        for (int j = 0; j < e; ++j)
            if (j != i) dsum[cid[j]] += dist(i, j);
        if (count[cid[i]] <= 1) continue; // singleton cluster contributes 0
        const double a = dsum[cid[i]] / (count[cid[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < kc; ++c)
            if (c != cid[i] && count[c] > 0) b = std::min(b, dsum[c] / count[c]);
        sil += (b - a) / std::max(a, b);
    }
    sil /= e;

    // centroids, per-cluster mean distance to centroid, scatter sums
    Mat centroid(kc, d);
    for (int i = 0; i < e; ++i)
        for (int c = 0; c < d; ++c) centroid(cid[i], c) += points(i, c);
    for (int c = 0; c < kc; ++c)
        for (int j = 0; j < d; ++j) centroid(c, j) /= count[c];

    std::vector<double> sigma(kc, 0.0);
    double within_ss = 0.0;
    for (int i = 0; i < e; ++i) {
        double s = 0.0;
        for (int c = 0; c < d; ++c) {
            const double diff = points(i, c) - centroid(cid[i], c);
            s += diff * diff;
        }
        within_ss += s;
        sigma[cid[i]] += std::sqrt(s);
    }
    for (int c = 0; c < kc; ++c) sigma[c] /= count[c];

    std::vector<double> gmean(d, 0.0);
    for (int i = 0; i < e; ++i)
        for (int c = 0; c < d; ++c) gmean[c] += points(i, c);
    for (double& g : gmean) g /= e;
    double between_ss = 0.0;
    for (int c = 0; c < kc; ++c) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) {
            const double diff = centroid(c, j) - gmean[j];
            s += diff * diff;
        }
        between_ss += count[c] * s;
    }

    double db = 0.0;
    for (int i = 0; i < kc; ++i) {
        double worst = 0.0;
        for (int j = 0; j < kc; ++j) {
            if (i == j) continue;
            double cd = 0.0;
            for (int c = 0; c < d; ++c) {
                const double diff = centroid(i, c) - centroid(j, c);
                cd += diff * diff;
            }
            cd = std::sqrt(cd);
            const double ratio = cd > 0.0 ? (sigma[i] + sigma[j]) / cd
                                          : std::numeric_limits<double>::infinity();
            worst = std::max(worst, ratio);
        }
        db += worst;
    }
    db /= kc;

    ClusterScores out;
    out.silhouette = sil;
    out.davies_bouldin = db;
    out.calinski_harabasz =
        within_ss > 0.0 ? (between_ss / (kc - 1)) / (within_ss / (e - kc))
                        : std::numeric_limits<double>::infinity();
    return out;
}

namespace {

Mat drop_columns(const Mat& states, std::span<const int> removed, int m) {
    std::vector<char> gone(states.cols, 0);
    for (int i = 0; i < m; ++i) gone[removed[i]] = 1;
    Mat out(states.rows, states.cols - m);
    for (int r = 0; r < states.rows; ++r) {
        int c_out = 0;
        for (int c = 0; c < states.cols; ++c)
            if (!gone[c]) out(r, c_out++) = states(r, c);
    }
    return out;
}

std::vector<int> binary_labels(const std::vector<taskgen::ConceptLabels>& labels, int concept_idx) {
    std::vector<int> out(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) out[i] = labels[i][concept_idx] > 0 ? 1 : 0;
    return out;
}

} // namespace

RemovalCurve removal_curve(const Mat& states, const std::vector<taskgen::ConceptLabels>& labels,
                           const infotheory::NodeOrdering& ordering, int concept_idx) {
    if (states.cols != recnet::kHidden)
        throw std::invalid_argument("expected 12 hidden-state columns");
    const std::vector<int> lab = binary_labels(labels, concept_idx);

    RemovalCurve curve;
    for (int m = 0; m + 2 <= states.cols; ++m) {
        const Mat surviving = drop_columns(states, ordering.removal_order, m);
        const Pca2 p = pca2(surviving);
        curve.removed.push_back(m);
        curve.scores.push_back(cluster_scores(p.projected, lab));
    }
    return curve;
}

RemovalCurve random_removal_baseline(const Mat& states,
                                     const std::vector<taskgen::ConceptLabels>& labels,
                                     int concept_idx, int n_samples, uint64_t seed) {
    if (n_samples <= 0) throw std::invalid_argument("n_samples must be positive");
    const std::vector<int> lab = binary_labels(labels, concept_idx);

    SplitMix64 rng(seed);
    std::vector<int> order(states.cols);
    RemovalCurve mean;
    const int m_count = states.cols - 1;
    mean.removed.resize(m_count);
    mean.scores.assign(m_count, {});
    for (int m = 0; m < m_count; ++m) mean.removed[m] = m;

    for (int s = 0; s < n_samples; ++s) {
        for (int i = 0; i < states.cols; ++i) order[i] = i;
        for (int i = states.cols - 1; i > 0; --i)
            std::swap(order[i], order[rng.below(static_cast<uint64_t>(i) + 1)]);
        for (int m = 0; m < m_count; ++m) {
            const Mat surviving = drop_columns(states, order, m);
            const Pca2 p = pca2(surviving);
            const ClusterScores sc = cluster_scores(p.projected, lab);
            mean.scores[m].silhouette += sc.silhouette;
            mean.scores[m].davies_bouldin += sc.davies_bouldin;
            mean.scores[m].calinski_harabasz += sc.calinski_harabasz;
        }
    }
    for (auto& sc : mean.scores) {
        sc.silhouette /= n_samples;
        sc.davies_bouldin /= n_samples;
        sc.calinski_harabasz /= n_samples;
    }
    return mean;
}

void write_removal_curves_csv(const std::string& path,
                              const std::array<RemovalCurve, 3>& targeted,
                              const std::array<RemovalCurve, 3>& random_baseline) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "concept,removed,order_kind,silhouette,davies_bouldin,calinski_harabasz\n";
    auto emit = [&f](int c, const RemovalCurve& curve, const char* kind) {
        for (size_t i = 0; i < curve.removed.size(); ++i)
            f << c << ',' << curve.removed[i] << ',' << kind << ','
              << format_double(curve.scores[i].silhouette) << ','
              << format_double(curve.scores[i].davies_bouldin) << ','
              << format_double(curve.scores[i].calinski_harabasz) << '\n';
    };
    for (int c = 0; c < 3; ++c) {
        emit(c, targeted[c], "targeted");
        emit(c, random_baseline[c], "random");
    }
}

void write_pca_points_csv(const std::string& path, const Pca2& pca,
                          const std::vector<taskgen::ConceptLabels>& labels) {
    if (static_cast<size_t>(pca.projected.rows) != labels.size())
        throw std::invalid_argument("labels size does not match points");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "episode_id,pc1,pc2,state_label\n";
    for (int i = 0; i < pca.projected.rows; ++i)
        f << i << ',' << format_double(pca.projected(i, 0)) << ','
          << format_double(pca.projected(i, 1)) << ',' << taskgen::state_index(labels[i]) << '\n';
}

} // namespace relay::latent
