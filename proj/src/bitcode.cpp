#include "hashinv/bitcode.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hashinv/errors.hpp"
#include "hashinv/kernels.hpp"

namespace hashinv {

BitCode code_from_signs(const std::vector<int>& signs) {
  BitCode c(static_cast<std::uint32_t>(signs.size()));
  for (std::uint32_t i = 0; i < c.length; ++i) {
    if (signs[i] != 1 && signs[i] != -1)
      throw input_error("sign vector entries must be +1 or -1");
    if (signs[i] == 1) c.set(i, true);
  }
  return c;
}

std::vector<int> signs_from_code(const BitCode& c) {
  std::vector<int> s(c.length);
  for (std::uint32_t i = 0; i < c.length; ++i) s[i] = c.sign(i);
  return s;
}

std::string code_to_string(const BitCode& c) {
  std::string s(c.length, '-');
  for (std::uint32_t i = 0; i < c.length; ++i)
    if (c.get(i)) s[i] = '+';
  return s;
}

BitCode code_from_string(const std::string& s) {
  BitCode c(static_cast<std::uint32_t>(s.size()));
  for (std::uint32_t i = 0; i < c.length; ++i) {
    if (s[i] == '+')
      c.set(i, true);
    else if (s[i] != '-')
      throw parse_error(std::string("bad code character '") + s[i] + "'");
  }
  return c;
}

std::uint32_t hamming_distance(const BitCode& a, const BitCode& b) {
  if (a.length != b.length)
    throw dimension_error("hamming_distance: length mismatch (" +
                          std::to_string(a.length) + " vs " +
                          std::to_string(b.length) + ")");
  return kernels::hamming(a.words.data(), b.words.data(), a.words.size());
}

BitCode CodeMatrix::get(std::uint32_t i) const {
  if (i >= n_) throw input_error("CodeMatrix row index out of range");
  BitCode c(l_);
  for (std::size_t w = 0; w < stride_; ++w) c.words[w] = row(i)[w];
  return c;
}

void CodeMatrix::set(std::uint32_t i, const BitCode& c) {
  if (i >= n_) throw input_error("CodeMatrix row index out of range");
  if (c.length != l_) throw dimension_error("CodeMatrix::set: length mismatch");
  for (std::size_t w = 0; w < stride_; ++w) row(i)[w] = c.words[w];
}

std::vector<std::uint32_t> distances_to(const BitCode& c, const CodeMatrix& m) {
  if (c.length != m.length())
    throw dimension_error("distances_to: length mismatch");
  std::vector<std::uint32_t> out(m.rows());
  const auto fn = kernels::active();
  for (std::uint32_t i = 0; i < m.rows(); ++i)
    out[i] = fn(c.words.data(), m.row(i), m.stride());
  return out;
}

std::uint32_t row_distance(const CodeMatrix& a, std::uint32_t i,
                           const CodeMatrix& b, std::uint32_t j) {
  if (a.length() != b.length())
    throw dimension_error("row_distance: length mismatch");
  return kernels::hamming(a.row(i), b.row(j), a.stride());
}

CodeMatrix read_codes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    for (char ch : line) {
      if (ch != '+' && ch != '-')
        throw parse_error(path + ":" + std::to_string(lineno) +
                          ": bad code character '" + std::string(1, ch) + "'");
    }
    if (!lines.empty() && line.size() != lines.front().size())
      throw parse_error(path + ":" + std::to_string(lineno) +
                        ": row length " + std::to_string(line.size()) +
                        " differs from first row length " +
                        std::to_string(lines.front().size()));
    lines.push_back(line);
  }
  if (lines.empty())
    throw parse_error(path + ":1: no code rows found");
  CodeMatrix m(static_cast<std::uint32_t>(lines.size()),
               static_cast<std::uint32_t>(lines.front().size()));
  for (std::uint32_t i = 0; i < m.rows(); ++i) {
    for (std::uint32_t j = 0; j < m.length(); ++j)
      if (lines[i][j] == '+') m.set_bit(i, j, true);
  }
  return m;
}

void write_codes(const std::string& path, const CodeMatrix& m) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");
  for (std::uint32_t i = 0; i < m.rows(); ++i) {
    std::string s(m.length(), '-');
    for (std::uint32_t j = 0; j < m.length(); ++j)
      if (m.get_bit(i, j)) s[j] = '+';
    out << s << '\n';
  }
  if (!out) throw io_error("write failed for " + path);
}

std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(line, &pos);
    } catch (const std::exception&) {
      throw parse_error(path + ":" + std::to_string(lineno) +
                        ": not an integer: '" + line + "'");
    }
    if (pos != line.size())
      throw parse_error(path + ":" + std::to_string(lineno) +
                        ": trailing characters after integer");
    if (v < 0)
      throw parse_error(path + ":" + std::to_string(lineno) +
                        ": labels must be nonnegative");
    labels.push_back(v);
  }
  if (labels.empty()) throw parse_error(path + ":1: no labels found");
  return labels;
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");
  for (int v : labels) out << v << '\n';
  if (!out) throw io_error("write failed for " + path);
}

}  // namespace hashinv
