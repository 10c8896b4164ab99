// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "tabmixer/errors.hpp"
#include "tabmixer/tbmx.hpp"

namespace tabmixer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct CsvRow {
  std::size_t offset = 0;  // byte offset of the row start
  std::vector<std::string> cells;
  std::vector<std::size_t> cell_offsets;
};

struct CsvTable {
  std::vector<std::string> header;
  std::unordered_map<std::string, CsvRow> rows_by_id;
};

CsvTable parse_csv(const fs::path& path) {
  const std::string text = read_text(path);
  CsvTable table;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      CsvRow row;
      row.offset = pos;
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = line.find(',', start);
        const std::size_t stop = comma == std::string_view::npos ? line.size() : comma;
        row.cells.emplace_back(line.substr(start, stop - start));
        row.cell_offsets.push_back(pos + start);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      if (first) {
        if (row.cells.empty() || row.cells[0] != "id") {
          throw ParseError(path.string() + ": byte 0: header must start with 'id'");
        }
        table.header = row.cells;
        first = false;
      } else {
        if (row.cells.size() != table.header.size()) {
          throw ParseError(path.string() + ": byte " + std::to_string(pos) + ": expected " +
                           std::to_string(table.header.size()) + " fields, found " +
                           std::to_string(row.cells.size()));
        }
        std::string id = row.cells[0];
        if (!table.rows_by_id.emplace(id, std::move(row)).second) {
          throw ParseError(path.string() + ": byte " + std::to_string(pos) +
                           ": duplicate id '" + id + "'");
        }
      }
    }
    pos = end + 1;
  }
  if (first) throw ParseError(path.string() + ": byte 0: empty CSV file");
  return table;
}

json parse_json_file(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

FeatureKind parse_kind(const std::string& kind, const std::string& feature) {
  if (kind == "numeric") return FeatureKind::numeric;
  if (kind == "categorical") return FeatureKind::categorical;
  throw ValidationError("feature '" + feature + "' has unknown kind '" + kind + "'");
}

void check_csv_safe(const std::string& text, const std::string& what) {
  if (text.find_first_of(",\n\r\"") != std::string::npos) {
    throw ValidationError(what + " '" + text + "' cannot be written to CSV");
  }
}

}  // namespace

void validate_sample(const MultimodalSample& sample) {
  if (sample.patient_id.empty()) {
    throw ValidationError("sample '" + sample.id + "' has an empty patient id");
  }
  if (!std::isfinite(sample.target)) {
    throw ValidationError("sample '" + sample.id + "' has a non-finite target");
  }
  if (!sample.video.defined() || sample.video.rank() != 4 || sample.video.dim(0) != 1) {
    throw ValidationError("sample '" + sample.id + "' video must have shape [1,T,H,W]");
  }
  for (double v : sample.video.values()) {
    if (!std::isfinite(v)) {
      throw ValidationError("sample '" + sample.id + "' video contains non-finite values");
    }
  }
}

Dataset load_dataset(const fs::path& path, LoadReport* report) {
  const fs::path manifest_path = fs::is_directory(path) ? path / "manifest.json" : path;
  const fs::path root = manifest_path.parent_path();
  const json manifest = parse_json_file(manifest_path);

  Dataset dataset;
  try {
    for (const auto& [name, kind] : manifest.at("schema").items()) {
      dataset.features.push_back({name, parse_kind(kind.get<std::string>(), name)});
    }
    if (manifest.contains("bin_edges")) {
      dataset.bin_edges = manifest.at("bin_edges").get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw ParseError(manifest_path.string() + ": invalid schema: " + e.what());
  }

  CsvTable csv;
  fs::path csv_path;
  const bool has_csv = manifest.contains("tabular_csv");
  if (has_csv) {
    csv_path = root / manifest.at("tabular_csv").get<std::string>();
    csv = parse_csv(csv_path);
  }
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < csv.header.size(); ++i) column[csv.header[i]] = i;

  LoadReport local;
  std::set<std::string> seen_ids;
  for (const auto& entry : manifest.at("samples")) {
    MultimodalSample sample;
    std::string video_rel;
    try {
      sample.id = entry.at("id").get<std::string>();
      sample.patient_id = entry.at("patient_id").get<std::string>();
      video_rel = entry.at("video").get<std::string>();
      sample.target = entry.at("target").get<double>();
    } catch (const json::exception& e) {
      throw ParseError(manifest_path.string() + ": malformed sample entry: " + e.what());
    }
    if (!seen_ids.insert(sample.id).second) {
      throw ValidationError(manifest_path.string() + ": duplicate sample id '" + sample.id + "'");
    }

    std::string missing;
    if (entry.contains("tabular")) {
      const auto& tab = entry.at("tabular");
      for (const auto& f : dataset.features) {
        if (!tab.contains(f.name) || tab.at(f.name).is_null() ||
            (tab.at(f.name).is_string() && tab.at(f.name).get<std::string>().empty())) {
          missing = f.name;
          break;
        }
        const auto& v = tab.at(f.name);
        if (f.kind == FeatureKind::numeric) {
          if (!v.is_number()) {
            throw ParseError(manifest_path.string() + ": sample '" + sample.id + "' feature '" +
                             f.name + "' is not numeric");
          }
          sample.tabular[f.name] = v.get<double>();
        } else {
          sample.tabular[f.name] = v.is_string() ? v.get<std::string>() : v.dump();
        }
      }
    } else if (has_csv) {
      auto row = csv.rows_by_id.find(sample.id);
      if (row == csv.rows_by_id.end()) {
        missing = "<no tabular row>";
      } else {
        for (const auto& f : dataset.features) {
          auto col = column.find(f.name);
          if (col == column.end()) {
            throw ParseError(csv_path.string() + ": byte 0: missing column '" + f.name + "'");
          }
          const std::string& cell = row->second.cells[col->second];
          if (cell.empty()) {
            missing = f.name;
            break;
          }
          if (f.kind == FeatureKind::numeric) {
            double value = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
              throw ParseError(csv_path.string() + ": byte " +
                               std::to_string(row->second.cell_offsets[col->second]) +
                               ": cannot parse '" + cell + "' as a number");
            }
            sample.tabular[f.name] = value;
          } else {
            sample.tabular[f.name] = cell;
          }
        }
      }
    } else if (!dataset.features.empty()) {
      missing = "<no tabular record>";
    }

    if (!missing.empty()) {
      local.excluded.emplace_back(sample.id, "missing tabular value: " + missing);
      continue;
    }

    const fs::path video_path = root / video_rel;
    if (!fs::exists(video_path)) {
      throw IoError("manifest " + manifest_path.string() + " references missing video " +
                    video_path.string());
    }
    sample.video = read_tbmx(video_path);
    validate_sample(sample);
    dataset.samples.push_back(std::move(sample));
  }
  local.loaded = dataset.samples.size();
  if (report) *report = std::move(local);
  return dataset;
}

void write_dataset(const Dataset& dataset, const fs::path& dir, bool tabular_as_csv) {
  std::error_code ec;
  fs::create_directories(dir / "videos", ec);
  if (ec) throw IoError("cannot create " + (dir / "videos").string() + ": " + ec.message());

  json schema = json::object();
  for (const auto& f : dataset.features) {
    schema[f.name] = f.kind == FeatureKind::numeric ? "numeric" : "categorical";
  }
  // Column order follows the manifest's (sorted) schema order.
  std::vector<FeatureSpec> ordered;
  for (const auto& [name, kind] : schema.items()) {
    ordered.push_back({name, parse_kind(kind.get<std::string>(), name)});
  }

  json manifest;
  manifest["schema"] = schema;
  if (!dataset.bin_edges.empty()) manifest["bin_edges"] = dataset.bin_edges;
  if (tabular_as_csv) manifest["tabular_csv"] = "tabular.csv";

  std::string csv = "id";
  for (const auto& f : ordered) {
    check_csv_safe(f.name, "feature name");
    csv += "," + f.name;
  }
  csv += "\n";

  json samples = json::array();
  for (const auto& s : dataset.samples) {
    const std::string video_rel = "videos/" + s.id + ".tbmx";
    write_tbmx(dir / video_rel, s.video);
    json entry{{"id", s.id}, {"patient_id", s.patient_id}, {"video", video_rel},
               {"target", s.target}};
    if (tabular_as_csv) {
      check_csv_safe(s.id, "sample id");
      csv += s.id;
      for (const auto& f : ordered) {
        csv += ",";
        auto it = s.tabular.find(f.name);
        if (it == s.tabular.end()) continue;
        if (const double* d = std::get_if<double>(&it->second)) {
          csv += format_double(*d);
        } else {
          const auto& text = std::get<std::string>(it->second);
          check_csv_safe(text, "categorical value");
          csv += text;
        }
      }
      csv += "\n";
    } else {
      json tab = json::object();
      for (const auto& [name, value] : s.tabular) {
        if (const double* d = std::get_if<double>(&value)) {
          tab[name] = *d;
        } else {
          tab[name] = std::get<std::string>(value);
        }
      }
      entry["tabular"] = tab;
    }
    samples.push_back(std::move(entry));
  }
  manifest["samples"] = std::move(samples);
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  if (tabular_as_csv) write_text(dir / "tabular.csv", csv);
}

}  // namespace tabmixer
