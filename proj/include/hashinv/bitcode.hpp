#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Packed binary codes. Sign convention: +1 maps to bit 1, −1 maps to bit 0.
// Codes are stored LSB-first in 64-bit words; the padding bits of the last
// word are always zero so whole-word xor/popcount gives exact distances.

namespace hashinv {

inline std::size_t words_for(std::uint32_t length) {
  return (static_cast<std::size_t>(length) + 63) / 64;
}

struct BitCode {
  std::uint32_t length = 0;
  std::vector<std::uint64_t> words;

  BitCode() = default;
  explicit BitCode(std::uint32_t l) : length(l), words(words_for(l), 0) {}

  bool get(std::uint32_t i) const {
    return (words[i >> 6] >> (i & 63)) & 1ull;
  }
  void set(std::uint32_t i, bool v) {
    if (v)
      words[i >> 6] |= (1ull << (i & 63));
    else
      words[i >> 6] &= ~(1ull << (i & 63));
  }
  // Sign at position i: +1 or −1.
  int sign(std::uint32_t i) const { return get(i) ? +1 : -1; }

  bool operator==(const BitCode& o) const = default;
};

BitCode code_from_signs(const std::vector<int>& signs);
std::vector<int> signs_from_code(const BitCode& c);
std::string code_to_string(const BitCode& c);    // '+' / '-' per bit
BitCode code_from_string(const std::string& s);  // inverse of the above

std::uint32_t hamming_distance(const BitCode& a, const BitCode& b);

// Row-major packed matrix of n codes of common length l. Storage is
// contiguous with a fixed per-row word stride so kernels can walk it.
class CodeMatrix {
 public:
  CodeMatrix() = default;
  CodeMatrix(std::uint32_t n, std::uint32_t l)
      : n_(n), l_(l), stride_(words_for(l)), words_(static_cast<std::size_t>(n) * stride_, 0) {}

  std::uint32_t rows() const { return n_; }
  std::uint32_t length() const { return l_; }
  std::size_t stride() const { return stride_; }

  const std::uint64_t* row(std::uint32_t i) const { return words_.data() + i * stride_; }
  std::uint64_t* row(std::uint32_t i) { return words_.data() + i * stride_; }

  BitCode get(std::uint32_t i) const;
  void set(std::uint32_t i, const BitCode& c);

  bool get_bit(std::uint32_t i, std::uint32_t j) const {
    return (row(i)[j >> 6] >> (j & 63)) & 1ull;
  }
  void set_bit(std::uint32_t i, std::uint32_t j, bool v) {
    if (v)
      row(i)[j >> 6] |= (1ull << (j & 63));
    else
      row(i)[j >> 6] &= ~(1ull << (j & 63));
  }

  bool operator==(const CodeMatrix& o) const = default;

 private:
  std::uint32_t n_ = 0;
  std::uint32_t l_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::uint64_t> words_;
};

// Distances from one code to every row (uses the active SIMD kernel).
std::vector<std::uint32_t> distances_to(const BitCode& c, const CodeMatrix& m);
std::uint32_t row_distance(const CodeMatrix& a, std::uint32_t i,
                           const CodeMatrix& b, std::uint32_t j);

// Text I/O. Codes: one line per row made of '+'/'-' characters only.
// Labels: one nonnegative integer per line. Parse failures carry the
// offending 1-based line number in the message.
CodeMatrix read_codes(const std::string& path);
void write_codes(const std::string& path, const CodeMatrix& m);
std::vector<int> read_labels(const std::string& path);
void write_labels(const std::string& path, const std::vector<int>& labels);

}  // namespace hashinv
