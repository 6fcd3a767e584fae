#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gepop/rng.hpp"

namespace gepop {

/// Fixed-length bit string, the genotype of the search space. Bits are
/// packed into 64-bit words so that Hamming distances and range popcounts
/// run word-parallel; bit i lives at words_[i/64] bit (i%64).
class BitString {
 public:
  BitString() = default;

  explicit BitString(std::size_t n_bits)
      : n_bits_(n_bits), words_((n_bits + 63) / 64, 0) {}

  /// Parse from a string of '0'/'1' characters, index 0 first.
  static BitString from_string(std::string_view bits) {
    BitString b(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] == '1') {
        b.set(i, true);
      } else if (bits[i] != '0') {
        throw std::invalid_argument("BitString::from_string: bad character");
      }
    }
    return b;
  }

  std::size_t size() const { return n_bits_; }

  bool bit(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }

  void set(std::size_t i, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v) {
      words_[i >> 6] |= mask;
    } else {
      words_[i >> 6] &= ~mask;
    }
  }

  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  /// Fill with uniform random bits; the tail of the last word stays zero so
  /// that equality and hashing can work on whole words.
  void randomize(Rng& rng) {
    for (auto& w : words_) w = rng();
    mask_tail();
  }

  int popcount() const {
    int c = 0;
    for (const auto w : words_) c += std::popcount(w);
    return c;
  }

  /// Number of set bits in [begin, end).
  int ones_in_range(std::size_t begin, std::size_t end) const {
    if (begin >= end) return 0;
    const std::size_t wb = begin >> 6, we = (end - 1) >> 6;
    const std::uint64_t first_mask = ~std::uint64_t{0} << (begin & 63);
    const std::uint64_t last_mask =
        ~std::uint64_t{0} >> (63 - ((end - 1) & 63));
    if (wb == we) return std::popcount(words_[wb] & first_mask & last_mask);
    int c = std::popcount(words_[wb] & first_mask);
    for (std::size_t w = wb + 1; w < we; ++w) c += std::popcount(words_[w]);
    c += std::popcount(words_[we] & last_mask);
    return c;
  }

  /// Read `width` consecutive bits starting at `begin` as an unsigned
  /// integer, most significant bit first (bit `begin` is the MSB).
  std::uint64_t unsigned_value(std::size_t begin, std::size_t width) const {
    std::uint64_t v = 0;
    for (std::size_t t = 0; t < width; ++t) v = (v << 1) | (bit(begin + t) ? 1u : 0u);
    return v;
  }

  std::string to_string() const {
    std::string s(n_bits_, '0');
    for (std::size_t i = 0; i < n_bits_; ++i)
      if (bit(i)) s[i] = '1';
    return s;
  }

  friend bool operator==(const BitString& a, const BitString& b) {
    return a.n_bits_ == b.n_bits_ && a.words_ == b.words_;
  }
  friend bool operator!=(const BitString& a, const BitString& b) {
    return !(a == b);
  }

  /// Hamming distance; the only genotype metric used anywhere.
  friend int hamming(const BitString& a, const BitString& b) {
    if (a.n_bits_ != b.n_bits_)
      throw std::invalid_argument("hamming: length mismatch");
    int c = 0;
    for (std::size_t w = 0; w < a.words_.size(); ++w)
      c += std::popcount(a.words_[w] ^ b.words_[w]);
    return c;
  }

  std::size_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull ^ n_bits_;
    for (const auto w : words_) {
      h ^= w;
      h *= 0x100000001b3ull;
    }
    return static_cast<std::size_t>(h);
  }

 private:
  void mask_tail() {
    const std::size_t tail = n_bits_ & 63;
    if (tail != 0 && !words_.empty())
      words_.back() &= ~std::uint64_t{0} >> (64 - tail);
  }

  std::size_t n_bits_ = 0;
  std::vector<std::uint64_t> words_;
};

struct BitStringHash {
  std::size_t operator()(const BitString& b) const { return b.hash(); }
};

}  // namespace gepop
