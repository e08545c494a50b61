#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ibf {

using LatentPoint = std::vector<double>;

inline void require_finite(const LatentPoint& z, const char* what) {
  for (double c : z) {
    if (!std::isfinite(c)) throw std::invalid_argument(std::string(what) + ": non-finite coordinate");
  }
}

inline double squared_distance(const LatentPoint& a, const LatentPoint& b) {
  if (a.size() != b.size()) throw std::invalid_argument("squared_distance: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return d2;
}

// Isotropic Gaussian kernel exp(-|a-b|^2 / (2 sigma^2)), in (0, 1].
inline double gaussian_kernel(const LatentPoint& a, const LatentPoint& b, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gaussian_kernel: sigma must be positive and finite");
  return std::exp(-squared_distance(a, b) / (2.0 * sigma * sigma));
}

// Participation ratio (sum lambda)^2 / sum lambda^2 of a non-negative spectrum.
inline double participation_ratio(const std::vector<double>& eigenvalues) {
  if (eigenvalues.empty()) throw std::invalid_argument("participation_ratio: empty spectrum");
  double s1 = 0.0, s2 = 0.0;
  for (double v : eigenvalues) {
    if (!(v >= 0.0)) throw std::invalid_argument("participation_ratio: negative eigenvalue");
    s1 += v;
    s2 += v * v;
  }
  if (s2 <= 0.0) throw std::invalid_argument("participation_ratio: all-zero spectrum");
  return (s1 * s1) / s2;
}

// Cyclic Jacobi eigensolver for small symmetric matrices (d <= 8 in practice).
// Converges when the off-diagonal Frobenius norm drops below
// 1e-12 * max(1, |A|_F). Returns eigenvalues sorted descending.
inline std::vector<double> symmetric_eigenvalues(std::vector<std::vector<double>> m) {
  const std::size_t n = m.size();
  for (const auto& row : m) {
    if (row.size() != n) throw std::invalid_argument("symmetric_eigenvalues: matrix not square");
  }
  if (n == 0) throw std::invalid_argument("symmetric_eigenvalues: empty matrix");
  if (n == 1) return {m[0][0]};

  double frob = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) frob += m[i][j] * m[i][j];
  frob = std::sqrt(frob);
  const double tol = 1e-12 * std::max(1.0, frob);

  for (int sweep = 0; sweep < 128; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * m[i][j] * m[i][j];
    if (std::sqrt(off) < tol) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (m[p][q] == 0.0) continue;
        const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m[k][p];
          const double mkq = m[k][q];
          m[k][p] = c * mkp - s * mkq;
          m[k][q] = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m[p][k];
          const double mqk = m[q][k];
          m[p][k] = c * mpk - s * mqk;
          m[q][k] = s * mpk + c * mqk;
        }
      }
    }
  }

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = m[i][i];
  std::sort(eig.begin(), eig.end(), std::greater<double>());
  return eig;
}

// Eigenvalue spectrum of the sample covariance (mean-centered, n-1 divisor),
// sorted descending with tiny negative numerical residue clamped to zero.
inline std::vector<double> covariance_spectrum(const std::vector<LatentPoint>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("covariance_spectrum: need at least 2 samples");
  const std::size_t d = samples[0].size();
  if (d == 0) throw std::invalid_argument("covariance_spectrum: zero-dimensional samples");
  for (const auto& s : samples) {
    if (s.size() != d) throw std::invalid_argument("covariance_spectrum: dimension mismatch");
  }

  std::vector<double> mean(d, 0.0);
  for (const auto& s : samples)
    for (std::size_t i = 0; i < d; ++i) mean[i] += s[i];
  for (auto& v : mean) v /= static_cast<double>(samples.size());

  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < d; ++i) {
      const double ci = s[i] - mean[i];
      for (std::size_t j = i; j < d; ++j) cov[i][j] += ci * (s[j] - mean[j]);
    }
  }
  const double denom = static_cast<double>(samples.size() - 1);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov[i][j] /= denom;
      cov[j][i] = cov[i][j];
    }
  }

  auto eig = symmetric_eigenvalues(cov);
  for (auto& v : eig) {
    if (v < 0.0) v = 0.0;
  }
  return eig;
}

}  // namespace ibf
