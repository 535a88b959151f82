#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

namespace didp {

// Fixed-universe bitset used for set-valued state variables.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t universe)
      : universe_(universe), words_((universe + 63) / 64, 0) {}
  Bitset(std::size_t universe, std::initializer_list<std::size_t> members)
      : Bitset(universe) {
    for (auto m : members) insert(m);
  }

  std::size_t universe() const { return universe_; }

  bool contains(std::size_t i) const {
    return i < universe_ && ((words_[i >> 6] >> (i & 63)) & 1U);
  }
  void insert(std::size_t i) { words_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  void erase(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

  std::size_t size() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  bool empty() const {
    for (auto w : words_)
      if (w != 0) return false;
    return true;
  }

  // Calls fn(i) for every member in increasing order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t k = 0; k < words_.size(); ++k) {
      std::uint64_t w = words_[k];
      while (w != 0) {
        const int bit = std::countr_zero(w);
        fn(k * 64 + static_cast<std::size_t>(bit));
        w &= w - 1;
      }
    }
  }

  std::vector<std::size_t> members() const {
    std::vector<std::size_t> out;
    for_each([&](std::size_t i) { out.push_back(i); });
    return out;
  }

  // True when no bit at or beyond the universe bound is set.
  bool within_universe() const {
    if (universe_ % 64 == 0 || words_.empty()) return true;
    return (words_.back() >> (universe_ % 64)) == 0;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

  std::size_t hash() const {
    std::size_t h = universe_;
    for (auto w : words_) h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }

  friend bool operator==(const Bitset&, const Bitset&) = default;

 private:
  std::size_t universe_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace didp
