#pragma once

// CSV / JSONL readers and writers for DomainCollection.
//
// CSV header: domain,split,label,f0,...,f{d-1}  (lines starting with '#' are skipped)
// JSONL:      {"domain": .., "split": "train"|"test", "label": -1|1|null, "features": [..]}

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gft/dataset.hpp"
#include "gft/error.hpp"

namespace gft {

enum class DataFormat { csv, jsonl };

inline DataFormat parse_data_format(std::string_view s) {
  if (s == "csv") return DataFormat::csv;
  if (s == "jsonl") return DataFormat::jsonl;
  throw InputError("unknown data format '" + std::string(s) + "' (expected csv or jsonl)");
}

inline std::string to_string(DataFormat f) { return f == DataFormat::csv ? "csv" : "jsonl"; }

namespace detail {

struct RawRow {
  std::string domain;
  bool is_train = true;
  std::optional<int> label;
  std::vector<double> features;
  std::size_t line = 0;
};

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

[[noreturn]] inline void fail_at(std::size_t line, const std::string& msg) {
  throw InputError("line " + std::to_string(line) + ": " + msg);
}

inline double parse_double(std::string_view tok, std::size_t line) {
  const std::string s(tok);
  if (s.empty()) fail_at(line, "empty feature value");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail_at(line, "malformed number '" + s + "'");
  }
  if (used != s.size()) fail_at(line, "malformed number '" + s + "'");
  return v;
}

inline std::optional<int> parse_label(std::string_view tok, std::size_t line) {
  if (tok.empty()) return std::nullopt;
  if (tok == "1" || tok == "+1") return 1;
  if (tok == "-1") return -1;
  fail_at(line, "label '" + std::string(tok) + "' outside {-1,1}");
}

inline bool parse_split(std::string_view tok, std::size_t line) {
  if (tok == "train") return true;
  if (tok == "test") return false;
  fail_at(line, "split must be 'train' or 'test', got '" + std::string(tok) + "'");
}

inline std::vector<RawRow> read_csv_rows(std::istream& in) {
  std::vector<RawRow> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto cols = split_commas(line);
    if (!header_seen) {
      if (cols.size() < 4 || cols[0] != "domain" || cols[1] != "split" || cols[2] != "label")
        fail_at(lineno, "expected header 'domain,split,label,f0,...'");
      for (std::size_t k = 3; k < cols.size(); ++k)
        if (cols[k] != "f" + std::to_string(k - 3))
          fail_at(lineno, "feature column " + std::to_string(k - 3) + " must be named f" +
                              std::to_string(k - 3));
      dim = cols.size() - 3;
      header_seen = true;
      continue;
    }
    if (cols.size() < 4) fail_at(lineno, "too few columns");
    RawRow row;
    row.line = lineno;
    row.domain = std::string(cols[0]);
    if (row.domain.empty()) fail_at(lineno, "empty domain id");
    row.is_train = parse_split(cols[1], lineno);
    row.label = parse_label(cols[2], lineno);
    row.features.reserve(cols.size() - 3);
    for (std::size_t k = 3; k < cols.size(); ++k) row.features.push_back(parse_double(cols[k], lineno));
    if (row.features.size() != dim)
      throw InputError("line " + std::to_string(lineno) + ": dimension mismatch in domain '" +
                       row.domain + "': expected " + std::to_string(dim) + " features, got " +
                       std::to_string(row.features.size()));
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw InputError("empty CSV file");
  return rows;
}

inline std::vector<RawRow> read_jsonl_rows(std::istream& in) {
  std::vector<RawRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail_at(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) fail_at(lineno, "expected a JSON object");
    for (const char* key : {"domain", "split", "features"})
      if (!obj.contains(key)) fail_at(lineno, std::string("missing key '") + key + "'");
    RawRow row;
    row.line = lineno;
    if (!obj["domain"].is_string() || !obj["split"].is_string())
      fail_at(lineno, "'domain' and 'split' must be strings");
    row.domain = obj["domain"].get<std::string>();
    if (row.domain.empty()) fail_at(lineno, "empty domain id");
    row.is_train = parse_split(obj["split"].get<std::string>(), lineno);
    if (obj.contains("label") && !obj["label"].is_null()) {
      const auto& l = obj["label"];
      if (!l.is_number_integer()) fail_at(lineno, "label must be -1, 1 or null");
      const auto v = l.get<long long>();
      if (v != 1 && v != -1) fail_at(lineno, "label " + std::to_string(v) + " outside {-1,1}");
      row.label = static_cast<int>(v);
    }
    if (!obj["features"].is_array() || obj["features"].empty())
      fail_at(lineno, "'features' must be a non-empty array");
    for (const auto& f : obj["features"]) {
      if (!f.is_number()) fail_at(lineno, "non-numeric feature");
      row.features.push_back(f.get<double>());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline DomainCollection assemble(const std::vector<RawRow>& rows,
                                 const std::optional<std::string>& target_id) {
  if (rows.empty()) throw InputError("data file contains no samples");
  std::vector<std::string> order;
  std::map<std::string, Dataset> by_id;
  std::map<std::string, bool> has_unlabeled_train;
  for (const auto& r : rows) {
    auto [it, inserted] = by_id.try_emplace(r.domain);
    if (inserted) {
      order.push_back(r.domain);
      it->second.domain_id = r.domain;
    }
    if (r.is_train && !r.label) has_unlabeled_train[r.domain] = true;
  }

  std::string target;
  if (target_id) {
    if (!by_id.count(*target_id)) throw InputError("target domain '" + *target_id + "' not found in data");
    target = *target_id;
  } else if (!has_unlabeled_train.empty()) {
    if (has_unlabeled_train.size() > 1)
      throw InputError("several domains have unlabeled train rows; pass the target id explicitly");
    target = has_unlabeled_train.begin()->first;
  } else {
    target = order.back();
  }

  std::size_t dim = rows.front().features.size();
  for (const auto& r : rows) {
    if (r.features.size() != dim)
      throw InputError("line " + std::to_string(r.line) + ": dimension mismatch in domain '" +
                       r.domain + "': expected " + std::to_string(dim) + ", got " +
                       std::to_string(r.features.size()));
    const bool is_target = r.domain == target;
    if (!r.label && !(is_target && r.is_train))
      fail_at(r.line, "missing label (allowed only for target train rows)");
    Sample s{r.features, r.label.value_or(kNoLabel)};
    auto& ds = by_id[r.domain];
    (r.is_train ? ds.train : ds.test).push_back(std::move(s));
  }

  std::vector<Dataset> sources;
  for (const auto& id : order)
    if (id != target) sources.push_back(std::move(by_id[id]));
  return make_collection(std::move(sources), std::move(by_id[target]));
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline DomainCollection read_collection(std::istream& in, DataFormat format,
                                        const std::optional<std::string>& target_id = std::nullopt) {
  const auto rows = format == DataFormat::csv ? detail::read_csv_rows(in) : detail::read_jsonl_rows(in);
  return detail::assemble(rows, target_id);
}

/// Loads and validates a collection. Target train labels are dropped even if present.
/// The target is `target_id` when given, otherwise the domain whose train rows are
/// unlabeled, otherwise the last domain to appear in the file.
inline DomainCollection load_collection(const std::string& path, DataFormat format,
                                        const std::optional<std::string>& target_id = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open data file '" + path + "'");
  return read_collection(in, format, target_id);
}

/// Writes sources in order, then the target (so the target is the last domain
/// and its train rows carry empty labels).
inline void write_collection(std::ostream& out, const DomainCollection& c, DataFormat format) {
  const std::size_t d = c.dim();
  auto emit = [&](const Dataset& ds) {
    for (const auto* split : {&ds.train, &ds.test}) {
      const char* split_name = split == &ds.train ? "train" : "test";
      for (const auto& s : *split) {
        if (format == DataFormat::csv) {
          out << ds.domain_id << ',' << split_name << ',';
          if (s.labeled()) out << s.label;
          for (double v : s.features) out << ',' << detail::format_double(v);
          out << '\n';
        } else {
          nlohmann::json obj;
          obj["domain"] = ds.domain_id;
          obj["split"] = split_name;
          obj["label"] = s.labeled() ? nlohmann::json(s.label) : nlohmann::json(nullptr);
          obj["features"] = s.features;
          out << obj.dump() << '\n';
        }
      }
    }
  };
  if (format == DataFormat::csv) {
    out << "domain,split,label";
    for (std::size_t k = 0; k < d; ++k) out << ",f" << k;
    out << '\n';
  }
  for (const auto& s : c.sources) emit(s);
  emit(c.target);
}

inline void save_collection(const std::string& path, const DomainCollection& c, DataFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_collection(out, c, format);
}

}  // namespace gft
