#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "imcmc/errors.hpp"
#include "imcmc/harness/data.hpp"
#include "imcmc/kernel_state.hpp"

namespace imcmc {

/// `iteration,<names...>` rows for every `thin`-th kept sample.
inline void write_trace_csv(std::ostream& out, const Trace& trace, std::size_t thin = 1) {
  if (thin == 0) thin = 1;
  out << "iteration";
  for (const auto& name : trace.names) out << ',' << name;
  out << '\n';
  char buf[32];
  for (std::size_t t = 0; t < trace.size(); t += thin) {
    out << t;
    for (std::size_t j = 0; j < trace.dim; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", trace.at(t, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

/// Writes to `path` through a temporary sibling file and a rename, so
/// readers never observe a partial file.
template <class Writer>
void write_file_atomically(const std::filesystem::path& path, Writer&& writer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    writer(out);
    out.flush();
    if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

/// Reads a trace CSV written by write_trace_csv. The iteration column is
/// dropped; the remaining columns become the trace parameters.
inline Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing trace header");
  const auto header = detail::split_csv(line);
  if (header.size() < 2 || header[0] != "iteration") {
    throw ParseError(1, "trace header must start with 'iteration' and name a column");
  }
  Trace t;
  for (std::size_t j = 1; j < header.size(); ++j) t.names.emplace_back(header[j]);
  t.dim = t.names.size();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != t.dim + 1) {
      throw ParseError(lineno, "expected " + std::to_string(t.dim + 1) + " fields, found " +
                                   std::to_string(f.size()));
    }
    for (std::size_t j = 1; j < f.size(); ++j) {
      t.samples.push_back(detail::parse_real(f[j], lineno, "value"));
    }
  }
  if (t.samples.empty()) throw ParseError(lineno, "trace has no samples");
  return t;
}

inline Trace load_trace_csv(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  return read_trace_csv(in);
}

}  // namespace imcmc
