#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qxfs {

// Fixed-length dense bit vector. Used both as a feature-subset genome
// (length k) and as an instance-subset genome (length n). Bits past size()
// in the last word are always zero.
class BitMask {
 public:
  BitMask() = default;

  explicit BitMask(std::size_t size, bool value = false)
      : words_((size + 63) / 64, value ? ~std::uint64_t{0} : 0), size_(size) {
    trim();
  }

  static BitMask ones(std::size_t size) { return BitMask(size, true); }
  static BitMask zeros(std::size_t size) { return BitMask(size, false); }

  // Parses a string of '0'/'1' characters, most significant position first
  // ("1011" sets positions 0, 2 and 3).
  static BitMask from_string(std::string_view text) {
    BitMask mask(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '1') {
        mask.set(i);
      } else if (text[i] != '0') {
        throw std::invalid_argument("BitMask::from_string: expected '0' or '1'");
      }
    }
    return mask;
  }

  static BitMask from_indices(std::size_t size, const std::vector<std::size_t>& indices) {
    BitMask mask(size);
    for (auto i : indices) mask.set(i);
    return mask;
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  bool test(std::size_t i) const {
    check(i);
    return (words_[i / 64] >> (i % 64)) & 1U;
  }
  bool operator[](std::size_t i) const { return test(i); }

  BitMask& set(std::size_t i, bool value = true) {
    check(i);
    const std::uint64_t bit = std::uint64_t{1} << (i % 64);
    if (value) {
      words_[i / 64] |= bit;
    } else {
      words_[i / 64] &= ~bit;
    }
    return *this;
  }
  BitMask& reset(std::size_t i) { return set(i, false); }
  BitMask& flip(std::size_t i) {
    check(i);
    words_[i / 64] ^= std::uint64_t{1} << (i % 64);
    return *this;
  }

  std::size_t count() const noexcept {
    std::size_t total = 0;
    for (auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
    return total;
  }
  bool any() const noexcept { return count() != 0; }
  bool none() const noexcept { return !any(); }
  bool all() const noexcept { return count() == size_; }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(count());
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t word = words_[w];
      while (word != 0) {
        const int bit = std::countr_zero(word);
        out.push_back(w * 64 + static_cast<std::size_t>(bit));
        word &= word - 1;
      }
    }
    return out;
  }

  std::string to_string() const {
    std::string out(size_, '0');
    for (std::size_t i = 0; i < size_; ++i) {
      if (test(i)) out[i] = '1';
    }
    return out;
  }

  const std::vector<std::uint64_t>& words() const noexcept { return words_; }

  friend bool operator==(const BitMask&, const BitMask&) = default;

 private:
  void check(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("BitMask index out of range");
  }
  void trim() {
    if (size_ % 64 != 0 && !words_.empty()) {
      words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
    }
  }

  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

inline std::size_t popcount(const BitMask& g) noexcept { return g.count(); }

inline std::size_t hamming(const BitMask& a, const BitMask& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming: mask lengths differ");
  std::size_t total = 0;
  const auto& wa = a.words();
  const auto& wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    total += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
  }
  return total;
}

}  // namespace qxfs

template <>
struct std::hash<qxfs::BitMask> {
  std::size_t operator()(const qxfs::BitMask& mask) const noexcept {
    std::size_t h = std::hash<std::size_t>{}(mask.size());
    for (auto w : mask.words()) {
      h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};
