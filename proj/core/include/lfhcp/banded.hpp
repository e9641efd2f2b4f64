#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lfhcp {

/// Symmetric positive-definite band matrix with an in-place Cholesky
/// factorization. Only the lower band is stored: entry (i, j) with
/// 0 <= i - j <= bandwidth lives at data_[i * (bandwidth + 1) + (i - j)].
class BandedSpd {
 public:
  BandedSpd(std::size_t n, std::size_t bandwidth);

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return bw_; }

  /// Adds v to entry (i, j) (and implicitly (j, i)). Requires |i - j| <= bandwidth.
  void add(std::size_t i, std::size_t j, double v);
  double at(std::size_t i, std::size_t j) const;
  void set_zero();

  /// Factorizes in place. Returns false if a non-positive pivot is met; the
  /// matrix contents are then unspecified.
  bool factorize();

  /// Solves A x = b using the factorization; b is overwritten with x.
  void solve_in_place(std::span<double> b) const;

 private:
  double& ref(std::size_t i, std::size_t j) { return data_[i * (bw_ + 1) + (i - j)]; }
  double get(std::size_t i, std::size_t j) const { return data_[i * (bw_ + 1) + (i - j)]; }

  std::size_t n_;
  std::size_t bw_;
  std::vector<double> data_;
  bool factored_ = false;
};

}  // namespace lfhcp
