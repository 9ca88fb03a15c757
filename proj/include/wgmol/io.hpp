#pragma once

// Locale-independent CSV/JSON output and spectrum input.

#include <charconv>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "wgmol/errors.hpp"
#include "wgmol/molecule.hpp"
#include "wgmol/scattering.hpp"
#include "wgmol/units.hpp"

namespace wgmol::io {

using json = nlohmann::ordered_json;

/// Shortest round-trip decimal representation, independent of the C locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidParameter("not a number: '" + std::string(s) + "'");
  return v;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row(const std::vector<double>& values) {
    if (values.size() != header_.size()) throw InvalidParameter("CSV row width does not match the header");
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format_number(v));
    rows_.push_back(std::move(cells));
    return *this;
  }

  CsvTable& row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw InvalidParameter("CSV row width does not match the header");
    rows_.push_back(std::move(cells));
    return *this;
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out += ',';
        out += cells[k];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

inline json complex_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

/// Simple CSV reader: header row, comma separated, numeric cells.
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw InvalidParameter("CSV is missing column '" + std::string(name) + "'");
  }
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  return cells;
}

inline CsvData parse_csv(const std::string& text, const std::string& origin) {
  CsvData d;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (d.header.empty()) {
      d.header = std::move(cells);
      continue;
    }
    if (cells.size() != d.header.size())
      throw InvalidParameter(origin + ":" + std::to_string(lineno) + ": expected " + std::to_string(d.header.size()) +
                             " columns");
    std::vector<double> row;
    try {
      for (const auto& c : cells) row.push_back(parse_number(c));
    } catch (const InvalidParameter& e) {
      throw InvalidParameter(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
    d.rows.push_back(std::move(row));
  }
  if (d.header.empty()) throw InvalidParameter(origin + ": empty CSV");
  return d;
}

/// Spectrum CSV (frequency_Hz, re, im) with a sidecar `<file>.json` holding
/// {"port": "S"|"A", "amplitude_hz": <Rabi amplitude / 2pi>}.
inline ReflectanceDataset load_spectrum(const std::filesystem::path& csv_path) {
  const auto data = parse_csv(read_file(csv_path), csv_path.string());
  const std::size_t cf = data.column("frequency_Hz"), cr = data.column("re"), ci = data.column("im");
  std::filesystem::path meta_path = csv_path;
  meta_path += ".json";
  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const json::exception& e) {
    throw InvalidParameter(meta_path.string() + ": " + e.what());
  }
  ReflectanceDataset out;
  if (!meta.contains("port") || !meta["port"].is_string()) throw InvalidParameter(meta_path.string() + ": missing port");
  const auto port = parse_port(meta["port"].get<std::string>());
  if (!port) throw InvalidParameter(meta_path.string() + ": port must be \"S\" or \"A\"");
  if (!meta.contains("amplitude_hz") || !meta["amplitude_hz"].is_number())
    throw InvalidParameter(meta_path.string() + ": missing amplitude_hz");
  out.amplitude = from_hz(meta["amplitude_hz"].get<double>());
  out.spectrum.port = *port;
  out.spectrum.drive_amplitude = out.amplitude;
  for (const auto& row : data.rows) {
    out.spectrum.frequencies.push_back(from_hz(row[cf]));
    out.spectrum.values.emplace_back(row[cr], row[ci]);
  }
  out.spectrum.validate();
  return out;
}

inline std::string spectrum_csv(const ComplexSpectrum& s) {
  CsvTable t({"frequency_Hz", "re", "im"});
  for (std::size_t k = 0; k < s.size(); ++k) t.row({to_hz(s.frequencies[k]), s.values[k].real(), s.values[k].imag()});
  return t.str();
}

inline std::string spectrum_sidecar(const ReflectanceDataset& d) {
  json j;
  j["port"] = std::string(to_string(d.spectrum.port));
  j["amplitude_hz"] = to_hz(d.amplitude);
  return j.dump(2) + "\n";
}

}  // namespace wgmol::io
