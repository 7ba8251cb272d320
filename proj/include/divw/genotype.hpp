#ifndef DIVW_GENOTYPE_HPP
#define DIVW_GENOTYPE_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "divw/error.hpp"
#include "divw/numerics.hpp"
#include "divw/rng.hpp"

// Streaming genotype columns. A column of n genotypes with
// P(0) = 1/4, P(1) = 1/2, P(2) = 1/4 is a pure function of its stream key, so
// it can be regenerated instead of stored. Each genotype is an inverse-CDF
// draw on a 2-bit uniform u in {0, 1, 2, 3}: 0 -> 0, {1, 2} -> 1, 3 -> 2,
// i.e. the popcount of u; 32 genotypes come from one 64-bit word.
namespace divw::genotype {

inline constexpr std::size_t kPerWord = 32;

inline std::size_t word_count(std::size_t n) { return (n + kPerWord - 1) / kPerWord; }

// Word w of the column with only the genotypes below n kept.
inline std::uint64_t masked_word(std::uint64_t key, std::size_t w, std::size_t n) {
  std::uint64_t bits = SplitMix64::word(key, w);
  const std::size_t left = n - w * kPerWord;
  if (left < kPerWord) bits &= (std::uint64_t{1} << (2 * left)) - 1;
  return bits;
}

inline void column(std::uint64_t key, std::span<std::uint8_t> out) {
  const std::size_t n = out.size();
  for (std::size_t w = 0; w < word_count(n); ++w) {
    const std::uint64_t bits = masked_word(key, w, n);
    const std::size_t base = w * kPerWord;
    const std::size_t m = std::min(kPerWord, n - base);
    for (std::size_t k = 0; k < m; ++k) {
      const auto u = static_cast<unsigned>((bits >> (2 * k)) & 3u);
      out[base + k] = static_cast<std::uint8_t>((u & 1u) + (u >> 1));
    }
  }
}

inline std::vector<std::uint8_t> column(std::uint64_t key, std::size_t n) {
  std::vector<std::uint8_t> out(n);
  column(key, out);
  return out;
}

struct ColumnMoments {
  double sum_z = 0.0;
  double sum_z2 = 0.0;
  double sum_zr = 0.0;
};

namespace detail {

// Genotypes of one byte (four 2-bit draws).
struct ByteTable {
  double z[256][4];
  constexpr ByteTable() : z{} {
    for (int b = 0; b < 256; ++b)
      for (int k = 0; k < 4; ++k) {
        const int u = (b >> (2 * k)) & 3;
        z[b][k] = static_cast<double>((u & 1) + (u >> 1));
      }
  }
};

inline constexpr ByteTable kByteTable{};

}  // namespace detail

/// response += coef * Z
inline void axpy(std::uint64_t key, double coef, std::span<double> response) {
  const std::size_t n = response.size();
  const auto& tab = detail::kByteTable.z;
  const std::size_t full = n / kPerWord;
  for (std::size_t w = 0; w < full; ++w) {
    const std::uint64_t bits = SplitMix64::word(key, w);
    double* rr = response.data() + w * kPerWord;
    for (int byte = 0; byte < 8; ++byte) {
      const double* z = tab[(bits >> (8 * byte)) & 0xFFu];
      double* q = rr + 4 * byte;
      q[0] += coef * z[0];
      q[1] += coef * z[1];
      q[2] += coef * z[2];
      q[3] += coef * z[3];
    }
  }
  if (full * kPerWord < n) {
    const std::uint64_t bits = SplitMix64::word(key, full);
    for (std::size_t k = 0; full * kPerWord + k < n; ++k) {
      const auto u = static_cast<unsigned>((bits >> (2 * k)) & 3u);
      response[full * kPerWord + k] += coef * static_cast<double>((u & 1u) + (u >> 1));
    }
  }
}

/// Sum Z, Sum Z^2 and Sum Z r for one column against a response r.
inline ColumnMoments moments(std::uint64_t key, std::span<const double> r) {
  constexpr std::uint64_t lo = 0x5555555555555555ULL;
  const std::size_t n = r.size();
  const auto& tab = detail::kByteTable.z;
  std::uint64_t sz = 0, sboth = 0;
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  const std::size_t full = n / kPerWord;
  for (std::size_t w = 0; w < full; ++w) {
    const std::uint64_t bits = SplitMix64::word(key, w);
    sz += static_cast<std::uint64_t>(std::popcount(bits));
    sboth += static_cast<std::uint64_t>(std::popcount(bits & (bits >> 1) & lo));
    const double* rr = r.data() + w * kPerWord;
    for (int byte = 0; byte < 8; ++byte) {
      const double* z = tab[(bits >> (8 * byte)) & 0xFFu];
      const double* q = rr + 4 * byte;
      acc0 += z[0] * q[0];
      acc1 += z[1] * q[1];
      acc2 += z[2] * q[2];
      acc3 += z[3] * q[3];
    }
  }
  if (full * kPerWord < n) {
    const std::uint64_t bits = masked_word(key, full, n);
    sz += static_cast<std::uint64_t>(std::popcount(bits));
    sboth += static_cast<std::uint64_t>(std::popcount(bits & (bits >> 1) & lo));
    for (std::size_t k = 0; full * kPerWord + k < n; ++k) {
      const auto u = static_cast<unsigned>((bits >> (2 * k)) & 3u);
      acc0 += static_cast<double>((u & 1u) + (u >> 1)) * r[full * kPerWord + k];
    }
  }
  // z^2 = z + 2 [both bits set]
  return {static_cast<double>(sz), static_cast<double>(sz + 2 * sboth), (acc0 + acc1) + (acc2 + acc3)};
}

struct MarginalFit {
  double beta = 0.0;
  double se = 0.0;
};

/// Simple regression of r on one genotype column (with intercept). `r` must
/// already be centred; `syy` is its sum of squares.
inline MarginalFit marginal_ols(std::uint64_t key, std::span<const double> centred, double syy) {
  const std::size_t n = centred.size();
  if (n < 3) throw ConfigError("marginal OLS needs at least 3 samples");
  const auto m = moments(key, centred);
  const double nn = static_cast<double>(n);
  const double szz = m.sum_z2 - m.sum_z * m.sum_z / nn;
  if (!(szz > 0.0)) throw DataError("monomorphic genotype column in simulated cohort");
  const double b = m.sum_zr / szz;
  const double rss = std::max(syy - b * m.sum_zr, 0.0);
  return {b, std::sqrt(rss / ((nn - 2.0) * szz))};
}

}  // namespace divw::genotype

#endif
