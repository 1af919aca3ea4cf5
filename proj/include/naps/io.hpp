#pragma once

// File formats and canonical serialization.
//
// Formats: edge list (two whitespace-separated node ids per line, `#`
// comments allowed), labels (one integer per line), probability matrix
// (CSV, optional header whose first cell starts with "class_"), config
// (key=value lines). Writers emit a canonical form: sorted deduped edges,
// header-bearing CSV, shortest round-trip float formatting. Parsing a
// canonical file and writing it back is byte-identical, and dataset
// fingerprints hash exactly these canonical bytes.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "naps/aps.hpp"
#include "naps/error.hpp"
#include "naps/graph.hpp"
#include "naps/synthetic.hpp"
#include "naps/version.hpp"

namespace naps::io {

// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t h = 0xCBF29CE484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ParseError(path + ": write failed");
}

// Calls fn(line, line_number) for each line; strips one trailing '\r'.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = nl == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++lineno;
    if (nl == std::string_view::npos && line.empty()) break;  // no final newline noise
    fn(line, lineno);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

inline bool blank_or_comment(std::string_view line) {
  const std::size_t i = line.find_first_not_of(" \t");
  return i == std::string_view::npos || line[i] == '#';
}

inline std::uint64_t parse_u64(std::string_view tok, const std::string& path,
                               std::size_t lineno) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError(path + ":" + std::to_string(lineno) + ": expected a nonnegative integer, got '" +
                     std::string(tok) + "'");
  }
  return v;
}

inline double parse_double(std::string_view tok, const std::string& path,
                           std::size_t lineno) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError(path + ":" + std::to_string(lineno) + ": expected a number, got '" +
                     std::string(tok) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

// --- edge list ---------------------------------------------------------

inline std::vector<std::pair<NodeId, NodeId>> parse_edge_list(std::string_view text,
                                                              const std::string& path) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  detail::for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    if (detail::blank_or_comment(line)) return;
    const auto toks = detail::split_ws(line);
    if (toks.size() != 2) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected two node ids, got " + std::to_string(toks.size()) +
                       " tokens");
    }
    const std::uint64_t a = detail::parse_u64(toks[0], path, lineno);
    const std::uint64_t b = detail::parse_u64(toks[1], path, lineno);
    if (a > 0xFFFFFFFFull || b > 0xFFFFFFFFull) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": node id too large");
    }
    edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
  });
  return edges;
}

inline std::vector<std::pair<NodeId, NodeId>> read_edge_list(const std::string& path) {
  return parse_edge_list(detail::read_file(path), path);
}

// Canonical form: each undirected edge once as "small large", sorted.
inline std::string write_edge_list_string(const Graph& g) {
  std::string out;
  for (NodeId v = 0; v < g.node_count; ++v) {
    for (NodeId w : g.neighbors(v)) {
      if (w <= v) continue;
      out += std::to_string(v);
      out += ' ';
      out += std::to_string(w);
      out += '\n';
    }
  }
  return out;
}

inline void write_edge_list(const std::string& path, const Graph& g) {
  detail::write_file(path, write_edge_list_string(g));
}

// --- labels -------------------------------------------------------------

inline NodeLabels parse_labels(std::string_view text, const std::string& path) {
  NodeLabels labels;
  std::uint32_t top = 0;
  detail::for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    if (detail::blank_or_comment(line)) return;
    const auto toks = detail::split_ws(line);
    if (toks.size() != 1) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected one label per line");
    }
    const std::uint64_t y = detail::parse_u64(toks[0], path, lineno);
    if (y > 0xFFFFFFFFull) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": label too large");
    }
    labels.labels.push_back(static_cast<std::uint32_t>(y));
    top = std::max(top, static_cast<std::uint32_t>(y));
  });
  labels.num_classes = labels.labels.empty() ? 0 : top + 1;
  return labels;
}

inline NodeLabels read_labels(const std::string& path) {
  return parse_labels(detail::read_file(path), path);
}

inline std::string write_labels_string(const NodeLabels& labels) {
  std::string out;
  for (std::uint32_t y : labels.labels) {
    out += std::to_string(y);
    out += '\n';
  }
  return out;
}

inline void write_labels(const std::string& path, const NodeLabels& labels) {
  detail::write_file(path, write_labels_string(labels));
}

// --- probability matrix --------------------------------------------------

inline ProbabilityMatrix parse_probability_matrix(std::string_view text,
                                                  const std::string& path) {
  ProbabilityMatrix m;
  bool saw_header = false;
  detail::for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    if (detail::blank_or_comment(line)) return;
    const auto cells = detail::split(line, ',');
    if (!saw_header && m.rows == 0 && !cells.empty() &&
        cells[0].substr(0, 6) == "class_") {
      saw_header = true;
      m.classes = static_cast<std::uint32_t>(cells.size());
      return;
    }
    if (m.classes == 0) {
      m.classes = static_cast<std::uint32_t>(cells.size());
    } else if (cells.size() != m.classes) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(m.classes) + " columns, got " +
                       std::to_string(cells.size()));
    }
    for (std::string_view c : cells) {
      m.values.push_back(detail::parse_double(c, path, lineno));
    }
    ++m.rows;
  });
  if (m.rows == 0) throw ParseError(path + ": no probability rows");
  try {
    normalize_rows(m);
  } catch (const InputError& e) {
    throw ParseError(path + ": " + e.what());
  }
  return m;
}

inline ProbabilityMatrix read_probability_matrix(const std::string& path) {
  return parse_probability_matrix(detail::read_file(path), path);
}

// Canonical form: class_ header plus shortest round-trip floats.
inline std::string write_probability_matrix_string(const ProbabilityMatrix& m) {
  std::string out;
  for (std::uint32_t c = 0; c < m.classes; ++c) {
    if (c) out += ',';
    out += "class_";
    out += std::to_string(c);
  }
  out += '\n';
  for (std::uint32_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    for (std::uint32_t c = 0; c < m.classes; ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

inline void write_probability_matrix(const std::string& path, const ProbabilityMatrix& m) {
  detail::write_file(path, write_probability_matrix_string(m));
}

// --- config files ---------------------------------------------------------

// key=value lines; later duplicates are kept (callers apply last-wins).
inline std::vector<std::pair<std::string, std::string>> parse_config(
    std::string_view text, const std::string& path) {
  std::vector<std::pair<std::string, std::string>> kv;
  detail::for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    if (detail::blank_or_comment(line)) return;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string_view s) {
      const std::size_t b = s.find_first_not_of(" \t");
      if (b == std::string_view::npos) return std::string_view{};
      const std::size_t e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    const auto key = trim(line.substr(0, eq));
    const auto val = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": empty key");
    }
    kv.emplace_back(std::string(key), std::string(val));
  });
  return kv;
}

inline std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  return parse_config(detail::read_file(path), path);
}

// --- dataset fingerprint and metadata -------------------------------------

// Content hash over the canonical serialization of all three dataset files.
inline std::uint64_t fingerprint_dataset(const Graph& g, const NodeLabels& labels,
                                         const ProbabilityMatrix& probs) {
  std::uint64_t h = fnv1a("edges\n");
  h = fnv1a(write_edge_list_string(g), h);
  h = fnv1a("labels\n", h);
  h = fnv1a(write_labels_string(labels), h);
  h = fnv1a("probs\n", h);
  h = fnv1a(write_probability_matrix_string(probs), h);
  return h;
}

inline std::string fingerprint_hex(std::uint64_t h) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + sizeof(buf), h, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

inline std::string join_doubles(std::span<const double> xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

// key=value metadata sidecar written next to generated dataset files.
inline std::string dataset_metadata_string(const SyntheticDataset& d,
                                           std::string_view preset_name) {
  std::string out;
  out += "preset=" + std::string(preset_name) + "\n";
  out += "seed=" + std::to_string(d.seed) + "\n";
  out += "n=" + std::to_string(d.sbm.n) + "\n";
  out += "blocks=" + std::to_string(d.sbm.blocks) + "\n";
  out += "block_probs=" + join_doubles(d.sbm.block_probs) + "\n";
  out += "p_in=" + format_double(d.sbm.p_in) + "\n";
  out += "p_out=" + format_double(d.sbm.p_out) + "\n";
  out += "mu=" + format_double(d.classifier.mu) + "\n";
  out += "sigma=" + format_double(d.classifier.sigma) + "\n";
  out += "temperatures=" + join_doubles(d.classifier.per_block_temperature) + "\n";
  out += "generator=" + std::string(kRngSchemeId) + "\n";
  out += "version=" + std::string(kVersion) + "\n";
  out += "fingerprint=" + fingerprint_hex(fingerprint_dataset(d.graph, d.labels, d.probs)) + "\n";
  return out;
}

}  // namespace naps::io
