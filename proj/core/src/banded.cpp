#include "lfhcp/banded.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lfhcp {

BandedSpd::BandedSpd(std::size_t n, std::size_t bandwidth)
    : n_(n), bw_(bandwidth), data_(n * (bandwidth + 1), 0.0) {}

void BandedSpd::add(std::size_t i, std::size_t j, double v) {
  if (i < j) std::swap(i, j);
  if (i - j > bw_ || i >= n_) throw std::out_of_range("BandedSpd::add outside band");
  ref(i, j) += v;
  factored_ = false;
}

double BandedSpd::at(std::size_t i, std::size_t j) const {
  if (i < j) std::swap(i, j);
  if (i - j > bw_) return 0.0;
  return get(i, j);
}

void BandedSpd::set_zero() {
  std::fill(data_.begin(), data_.end(), 0.0);
  factored_ = false;
}

bool BandedSpd::factorize() {
  for (std::size_t j = 0; j < n_; ++j) {
    const std::size_t k0 = j > bw_ ? j - bw_ : 0;
    double d = get(j, j);
    for (std::size_t k = k0; k < j; ++k) d -= get(j, k) * get(j, k);
    if (!(d > 0.0)) return false;
    const double ljj = std::sqrt(d);
    ref(j, j) = ljj;
    const std::size_t imax = std::min(n_ - 1, j + bw_);
    for (std::size_t i = j + 1; i <= imax; ++i) {
      const std::size_t kk = i > bw_ ? i - bw_ : 0;
      double s = get(i, j);
      for (std::size_t k = std::max(k0, kk); k < j; ++k) s -= get(i, k) * get(j, k);
      ref(i, j) = s / ljj;
    }
  }
  factored_ = true;
  return true;
}

void BandedSpd::solve_in_place(std::span<double> b) const {
  if (!factored_) throw std::logic_error("BandedSpd::solve_in_place before factorize");
  if (b.size() != n_) throw std::invalid_argument("BandedSpd::solve_in_place size mismatch");
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t k0 = i > bw_ ? i - bw_ : 0;
    double s = b[i];
    for (std::size_t k = k0; k < i; ++k) s -= get(i, k) * b[k];
    b[i] = s / get(i, i);
  }
  for (std::size_t ii = n_; ii-- > 0;) {
    const std::size_t kmax = std::min(n_ - 1, ii + bw_);
    double s = b[ii];
    for (std::size_t k = ii + 1; k <= kmax; ++k) s -= get(k, ii) * b[k];
    b[ii] = s / get(ii, ii);
  }
}

}  // namespace lfhcp
