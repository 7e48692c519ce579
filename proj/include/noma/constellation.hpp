#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace noma {

using Symbol = std::complex<double>;

/// Finite modulation alphabet with Gray bit labels.
///
/// Points are stored in label order of construction; `label(i)` holds the
/// bits of point `i` packed into the low `bits_per_symbol()` bits. The set
/// of distinct symbol differences is precomputed so that simulators can key
/// SIC residual patterns by a small integer code instead of a complex value.
class Constellation {
 public:
  Constellation(std::vector<Symbol> points, std::vector<std::uint32_t> labels, double avg_power)
      : points_(std::move(points)), labels_(std::move(labels)), avg_power_(avg_power) {
    const std::size_t m = points_.size();
    if (m < 2 || !std::has_single_bit(m))
      throw std::invalid_argument("constellation size must be a power of two >= 2");
    if (labels_.size() != m) throw std::invalid_argument("one bit label per point required");
    bits_ = static_cast<unsigned>(std::countr_zero(m));
    std::vector<std::uint32_t> sorted = labels_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("bit labels must be distinct");
    if (sorted.back() >> bits_ != 0) throw std::invalid_argument("bit label wider than log2(M)");

    double energy = 0.0;
    for (const auto& p : points_) energy += std::norm(p);
    energy /= static_cast<double>(m);
    if (std::abs(energy - avg_power_) > 1e-12 * std::max(1.0, avg_power_))
      throw std::invalid_argument("average power does not match the points");

    difference_code_.resize(m * m);
    for (std::size_t t = 0; t < m; ++t) {
      for (std::size_t r = 0; r < m; ++r) {
        const Symbol d = points_[t] - points_[r];
        auto it = std::find(differences_.begin(), differences_.end(), d);
        if (it == differences_.end()) {
          differences_.push_back(d);
          it = differences_.end() - 1;
        }
        difference_code_[t * m + r] = static_cast<int>(it - differences_.begin());
      }
    }
  }

  std::size_t size() const { return points_.size(); }
  unsigned bits_per_symbol() const { return bits_; }
  double avg_power() const { return avg_power_; }
  std::span<const Symbol> points() const { return points_; }

  const Symbol& point(std::size_t i) const { return points_.at(i); }
  std::uint32_t label(std::size_t i) const { return labels_.at(i); }

  /// Distinct values of point(t) - point(r) over all ordered pairs, 0 included.
  std::span<const Symbol> differences() const { return differences_; }
  int difference_code(std::size_t tx, std::size_t rx) const {
    check(tx);
    check(rx);
    return difference_code_[tx * size() + rx];
  }

 private:
  void check(std::size_t i) const {
    if (i >= size()) throw std::out_of_range("symbol index out of range");
  }

  std::vector<Symbol> points_;
  std::vector<std::uint32_t> labels_;
  double avg_power_;
  unsigned bits_ = 0;
  std::vector<Symbol> differences_;
  std::vector<int> difference_code_;
};

/// Tx/rx symbol pair of a pairwise error event.
struct SymbolPair {
  Symbol tx;
  Symbol rx_hypothesis;
  Symbol delta() const { return tx - rx_hypothesis; }
  bool is_error_event() const { return delta() != Symbol{}; }
};

inline Symbol symbol_difference(Symbol x, Symbol x_hat) { return x - x_hat; }

/// Gray-labelled QPSK with mean energy `avg_power`.
///
/// Index order walks the circle so that cyclically adjacent indices are
/// nearest neighbours: 0:(+1+j) "00", 1:(-1+j) "01", 2:(-1-j) "11",
/// 3:(+1-j) "10", all scaled by sqrt(avg_power/2).
inline Constellation qpsk_constellation(double avg_power = 1.0) {
  if (!(avg_power > 0.0) || !std::isfinite(avg_power))
    throw std::domain_error("QPSK average power must be positive");
  const double a = std::sqrt(avg_power / 2.0);
  return Constellation({{a, a}, {-a, a}, {-a, -a}, {a, -a}}, {0b00, 0b01, 0b11, 0b10}, avg_power);
}

/// Hamming distance between the labels of points `x` and `x_hat`.
inline unsigned bit_errors(const Constellation& c, std::size_t x, std::size_t x_hat) {
  return static_cast<unsigned>(std::popcount(c.label(x) ^ c.label(x_hat)));
}

}  // namespace noma
