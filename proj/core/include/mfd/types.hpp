#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

namespace mfd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Cloud = std::vector<Vec>;
using Rng = std::mt19937_64;

// Fills a vector with independent standard normals.
inline Vec gaussian_vec(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Packs a cloud into a D x n matrix (one point per column).
inline Mat to_matrix(const Cloud& pts) {
  if (pts.empty()) return Mat(0, 0);
  Mat m(pts.front().size(), static_cast<Eigen::Index>(pts.size()));
  for (std::size_t j = 0; j < pts.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = pts[j];
  return m;
}

inline Cloud to_cloud(const Mat& m) {
  Cloud out;
  out.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) out.emplace_back(m.col(j));
  return out;
}

}  // namespace mfd
