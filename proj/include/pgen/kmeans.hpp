#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pgen/rng.hpp"

namespace pgen {

struct KMeansParams {
  int k = 8;
  double tolerance = 1e-4;  // relative inertia change
  int max_iter = 1000;
  int n_init = 10;
  std::uint64_t seed = 0;

  bool operator==(const KMeansParams&) const = default;
};

template <typename S>
using FeatureMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
struct ClusterModel {
  int k = 0;
  FeatureMatrix<S> centroids;  // k x d
  S inertia = 0;
  KMeansParams params;
  std::vector<S> inertia_trace;  // per-iteration inertia of the winning restart

  int dim() const { return int(centroids.cols()); }
};

// Nearest centroid by squared Euclidean distance, ties to the lowest index.
template <typename S>
int assign_cluster(const ClusterModel<S>& model, const Eigen::Matrix<S, Eigen::Dynamic, 1>& feature) {
  if (model.k < 1) throw std::invalid_argument("assign_cluster: model not fitted");
  if (feature.size() != model.centroids.cols())
    throw std::invalid_argument("assign_cluster: feature dimension mismatch");
  int best = 0;
  S best_d = (feature.transpose() - model.centroids.row(0)).squaredNorm();
  for (int j = 1; j < model.k; ++j) {
    S d = (feature.transpose() - model.centroids.row(j)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

namespace detail {

template <typename S>
S lloyd_run(const FeatureMatrix<S>& x, const KMeansParams& p, Rng& rng, FeatureMatrix<S>& centroids,
            std::vector<int>& labels, std::vector<S>& trace) {
  const int n = int(x.rows()), d = int(x.cols()), k = p.k;

  // init: k distinct data points chosen uniformly
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int j = 0; j < k; ++j) {
    int pick = j + int(rng.uniform_int(std::uint64_t(n - j)));
    std::swap(idx[j], idx[pick]);
  }
  centroids.resize(k, d);
  for (int j = 0; j < k; ++j) centroids.row(j) = x.row(idx[j]);

  labels.assign(n, 0);
  trace.clear();
  S prev_inertia = std::numeric_limits<S>::infinity();
  for (int iter = 0; iter < p.max_iter; ++iter) {
    // assignment
    S inertia = 0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      S best_d = (x.row(i) - centroids.row(0)).squaredNorm();
      for (int j = 1; j < k; ++j) {
        S dist = (x.row(i) - centroids.row(j)).squaredNorm();
        if (dist < best_d) {
          best_d = dist;
          best = j;
        }
      }
      labels[i] = best;
      inertia += best_d;
    }
    // Lloyd iterations cannot increase the objective; anything beyond FP
    // rounding indicates a broken update.
    if (!trace.empty() && inertia > trace.back() * (S(1) + S(1e-12)) + S(1e-30))
      throw std::logic_error("k-means inertia increased between iterations");
    trace.push_back(inertia);

    // update; an emptied cluster keeps its previous centroid
    FeatureMatrix<S> sums = FeatureMatrix<S>::Zero(k, d);
    std::vector<Eigen::Index> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(labels[i]) += x.row(i);
      ++counts[labels[i]];
    }
    for (int j = 0; j < k; ++j)
      if (counts[j] > 0) centroids.row(j) = sums.row(j) / S(counts[j]);

    if (inertia == S(0)) break;
    if (prev_inertia != std::numeric_limits<S>::infinity() &&
        (prev_inertia - inertia) < p.tolerance * prev_inertia)
      break;
    prev_inertia = inertia;
  }

  // final inertia against the final centroids
  S inertia = 0;
  for (int i = 0; i < n; ++i) {
    int best = 0;
    S best_d = (x.row(i) - centroids.row(0)).squaredNorm();
    for (int j = 1; j < k; ++j) {
      S dist = (x.row(i) - centroids.row(j)).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = j;
      }
    }
    labels[i] = best;
    inertia += best_d;
  }
  return inertia;
}

}  // namespace detail

// Lloyd's K-means, best of n_init seeded restarts by inertia.
template <typename S>
ClusterModel<S> fit_clusters(const FeatureMatrix<S>& features, const KMeansParams& params) {
  const int n = int(features.rows());
  if (params.k < 1) throw std::invalid_argument("fit_clusters: k must be >= 1");
  if (n < params.k) throw std::invalid_argument("fit_clusters: need at least k points");
  if (!features.allFinite()) throw std::invalid_argument("fit_clusters: non-finite features");

  Rng rng(params.seed);
  ClusterModel<S> best;
  best.params = params;
  best.k = params.k;
  best.inertia = std::numeric_limits<S>::infinity();
  for (int restart = 0; restart < params.n_init; ++restart) {
    FeatureMatrix<S> centroids;
    std::vector<int> labels;
    std::vector<S> trace;
    S inertia = detail::lloyd_run(features, params, rng, centroids, labels, trace);
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.centroids = std::move(centroids);
      best.inertia_trace = std::move(trace);
    }
  }
  return best;
}

// Labels of a fitted model over a feature set.
template <typename S>
std::vector<int> assign_all(const ClusterModel<S>& model, const FeatureMatrix<S>& features) {
  std::vector<int> labels(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    Eigen::Matrix<S, Eigen::Dynamic, 1> f = features.row(i).transpose();
    labels[i] = assign_cluster(model, f);
  }
  return labels;
}

}  // namespace pgen
