#pragma once

// Linear conic programs in standard form
//
//   minimize c'x  subject to  A x = b,  x in K,
//
// and the line-oriented CONICDUMP interchange format.

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "regmomsos/conic/cones.hpp"

namespace regmomsos::conic {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct ConicProgram {
  std::vector<double> c;
  std::vector<Triplet> A;
  std::vector<double> b;
  ConeSpec cone;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }

  void validate() const {
    cone.validate();
    if (cone.dim() != num_vars()) {
      throw std::invalid_argument("ConicProgram: cone dimension " + std::to_string(cone.dim()) +
                                  " does not match " + std::to_string(num_vars()) + " variables");
    }
    for (const auto& t : A) {
      if (t.row < 0 || t.row >= num_rows() || t.col < 0 || t.col >= num_vars()) {
        throw std::invalid_argument("ConicProgram: triplet (" + std::to_string(t.row) + ", " +
                                    std::to_string(t.col) + ") out of range");
      }
      if (!std::isfinite(t.value)) throw std::invalid_argument("ConicProgram: non-finite entry in A");
    }
    for (double v : c) {
      if (!std::isfinite(v)) throw std::invalid_argument("ConicProgram: non-finite entry in c");
    }
    for (double v : b) {
      if (!std::isfinite(v)) throw std::invalid_argument("ConicProgram: non-finite entry in b");
    }
  }

  friend bool operator==(const ConicProgram&, const ConicProgram&) = default;
};

/// Shortest decimal literal that parses back to exactly v.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

inline void dump(const ConicProgram& p, std::ostream& os) {
  os << "CONICDUMP 1\n";
  os << "vars " << p.num_vars() << " rows " << p.num_rows() << "\n";
  for (const auto& blk : p.cone.blocks) os << "cone " << to_string(blk.kind) << " " << blk.size << "\n";
  os << "c\n";
  for (double v : p.c) os << format_double(v) << "\n";
  os << "A\n";
  for (const auto& t : p.A) os << t.row << " " << t.col << " " << format_double(t.value) << "\n";
  os << "b\n";
  for (double v : p.b) os << format_double(v) << "\n";
  if (!os) throw std::runtime_error("dump: write failed");
}

inline std::string dump(const ConicProgram& p) {
  std::ostringstream os;
  dump(p, os);
  return os.str();
}

class DumpParseError : public std::runtime_error {
 public:
  DumpParseError(int line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

inline ConicProgram parse_dump(std::istream& is) {
  ConicProgram p;
  std::string line;
  int lineno = 0;
  auto next = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  auto fail = [&](const std::string& msg) -> DumpParseError { return DumpParseError(lineno, msg); };

  if (!next() || line != "CONICDUMP 1") throw fail("expected header 'CONICDUMP 1'");
  if (!next()) throw fail("missing 'vars' line");
  int nvars = 0;
  int nrows = 0;
  {
    std::istringstream ss(line);
    std::string kv, kr, extra;
    if (!(ss >> kv >> nvars >> kr >> nrows) || kv != "vars" || kr != "rows" || (ss >> extra) ||
        nvars < 0 || nrows < 0) {
      throw fail("expected 'vars <N> rows <M>'");
    }
  }
  if (!next()) throw fail("unexpected end of file");
  while (line.rfind("cone ", 0) == 0) {
    std::istringstream ss(line);
    std::string tag, kind, extra;
    int size = -1;
    if (!(ss >> tag >> kind >> size) || (ss >> extra) || size < 0) throw fail("malformed cone line");
    ConeBlock blk;
    if (kind == "FREE") blk = ConeBlock::free(size);
    else if (kind == "NONNEG") blk = ConeBlock::nonneg(size);
    else if (kind == "SOC") blk = ConeBlock::soc(size);
    else if (kind == "PSD") blk = ConeBlock::psd(size);
    else throw fail("unknown cone kind '" + kind + "'");
    p.cone.blocks.push_back(blk);
    if (!next()) throw fail("unexpected end of file");
  }
  if (line != "c") throw fail("expected section 'c', got '" + line + "'");
  p.c.reserve(nvars);
  for (int i = 0; i < nvars; ++i) {
    if (!next()) throw fail("unexpected end of file in section c");
    try {
      p.c.push_back(parse_double(line));
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
  }
  if (!next() || line != "A") throw fail("expected section 'A'");
  while (true) {
    if (!next()) throw fail("unexpected end of file in section A");
    if (line == "b") break;
    std::istringstream ss(line);
    Triplet t;
    std::string val, extra;
    if (!(ss >> t.row >> t.col >> val) || (ss >> extra)) throw fail("malformed triplet");
    try {
      t.value = parse_double(val);
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
    p.A.push_back(t);
  }
  p.b.reserve(nrows);
  for (int i = 0; i < nrows; ++i) {
    if (!next()) throw fail("unexpected end of file in section b");
    try {
      p.b.push_back(parse_double(line));
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
  }
  while (next()) {
    if (!line.empty()) throw fail("trailing content after section b");
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw DumpParseError(lineno, e.what());
  }
  return p;
}

inline ConicProgram parse_dump(const std::string& text) {
  std::istringstream is(text);
  return parse_dump(is);
}

}  // namespace regmomsos::conic
