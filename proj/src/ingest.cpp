#include "smdcard/ingest.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "smdcard/error.hpp"
#include "smdcard/hash.hpp"

namespace smdcard {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Files and canonical JSON
// ---------------------------------------------------------------------------

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kMissingInput, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::kMissingInput, "failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kMissingInput, "cannot move output into place at " + path.string());
  }
}

namespace {

void dump(const json& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(it.key()).dump(-1, ' ', false, json::error_handler_t::strict) + ": ";
        dump(it.value(), out, depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        dump(v, out, depth + 1);
      }
      out += "\n" + close + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw Error(ErrorCode::kInternal, "non-finite number in JSON output");
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
      out += buf;
      return;
    }
    default:
      out += j.dump(-1, ' ', false, json::error_handler_t::strict);
  }
}

}  // namespace

std::string dump_canonical_json(const json& doc) {
  std::string out;
  dump(doc, out, 0);
  out += "\n";
  return out;
}

json parse_json_file(const fs::path& path) {
  const auto text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Delimited text
// ---------------------------------------------------------------------------

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;  // from_chars rejects a leading plus
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::vector<std::vector<std::string>> read_delimited(const fs::path& path) {
  const std::string text = read_text_file(path);
  const char delim = path.extension() == ".tsv" ? '\t' : ',';
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      row_started = true;
    } else if (c == delim) {
      row.push_back(std::move(field));
      field.clear();
      row_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (row_started || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      field.clear();
      row.clear();
      row_started = false;
    } else {
      field += c;
      row_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::kParse, path.string() + ": unterminated quoted field");
  if (row_started || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r\t") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string exact_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<std::size_t> header_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

bool is_json_lines(const fs::path& path) {
  return path.extension() == ".jsonl" || path.extension() == ".ndjson";
}

EmbeddingSet read_embeddings_jsonl(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> subgroup, region;
  bool has_subgroup = false, has_region = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, path.string() + ": row " + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("features") || !rec["features"].is_array()) {
      throw Error(ErrorCode::kParse, path.string() + ": row " + std::to_string(line_no) + " lacks a features array");
    }
    for (auto it = rec.begin(); it != rec.end(); ++it) {
      if (it.key() != "id" && it.key() != "features" && it.key() != "subgroup" && it.key() != "region") {
        throw Error(ErrorCode::kParse, path.string() + ": row " + std::to_string(line_no) + " has unknown key \"" +
                                           it.key() + "\"");
      }
    }
    std::vector<double> values;
    std::size_t col = 0;
    for (const auto& v : rec["features"]) {
      ++col;
      if (!v.is_number()) {
        throw Error(ErrorCode::kParse, path.string() + ": parse error at row " + std::to_string(line_no) +
                                           " col " + std::to_string(col) + ": non-numeric value");
      }
      values.push_back(v.get<double>());
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw Error(ErrorCode::kParse, path.string() + ": row " + std::to_string(line_no) + " has " +
                                         std::to_string(values.size()) + " features, expected " +
                                         std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(values));
    ids.push_back(rec.contains("id") ? (rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump())
                                     : std::to_string(rows.size() - 1));
    if (rec.contains("subgroup")) has_subgroup = true;
    if (rec.contains("region")) has_region = true;
    subgroup.push_back(rec.value("subgroup", std::string()));
    region.push_back(rec.value("region", std::string()));
  }
  if (rows.empty()) throw Error(ErrorCode::kParse, path.string() + ": no records");
  Eigen::MatrixXd data(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  try {
    return EmbeddingSet(std::move(ids), std::move(data),
                        has_subgroup ? std::optional(std::move(subgroup)) : std::nullopt,
                        has_region ? std::optional(std::move(region)) : std::nullopt);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace

EmbeddingSet read_embeddings(const fs::path& path, const std::string& id_column,
                             const std::optional<std::string>& subgroup_column,
                             const std::optional<std::string>& region_column) {
  if (is_json_lines(path)) return read_embeddings_jsonl(path);
  const auto rows = read_delimited(path);
  if (rows.size() < 2) throw Error(ErrorCode::kParse, path.string() + ": needs a header row and at least one data row");
  const auto& header = rows.front();
  const auto id_idx = header_index(header, id_column);
  std::optional<std::size_t> sub_idx, reg_idx;
  if (subgroup_column) {
    sub_idx = header_index(header, *subgroup_column);
    if (!sub_idx) throw Error(ErrorCode::kParse, path.string() + ": subgroup column \"" + *subgroup_column + "\" not found");
  }
  if (region_column) {
    reg_idx = header_index(header, *region_column);
    if (!reg_idx) throw Error(ErrorCode::kParse, path.string() + ": region column \"" + *region_column + "\" not found");
  }
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != id_idx && c != sub_idx && c != reg_idx) feature_cols.push_back(c);
  }
  if (feature_cols.empty()) throw Error(ErrorCode::kParse, path.string() + ": no feature columns");

  const auto n = rows.size() - 1;
  Eigen::MatrixXd data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feature_cols.size()));
  std::vector<std::string> ids, subgroup, region;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw Error(ErrorCode::kParse, path.string() + ": row " + std::to_string(r + 1) + " has " +
                                         std::to_string(row.size()) + " fields, expected " +
                                         std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const auto c = feature_cols[j];
      const auto v = parse_number(row[c]);
      if (!v) {
        throw Error(ErrorCode::kParse, path.string() + ": parse error at row " + std::to_string(r + 1) + " col " +
                                           std::to_string(c + 1) + ": non-numeric value \"" + row[c] + "\"");
      }
      data(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) = *v;
    }
    const std::string id = id_idx ? row[*id_idx] : std::to_string(r - 1);
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kParse, path.string() + ": duplicate id \"" + id + "\" at row " + std::to_string(r + 1));
    }
    ids.push_back(id);
    if (sub_idx) subgroup.push_back(row[*sub_idx]);
    if (reg_idx) region.push_back(row[*reg_idx]);
  }
  return EmbeddingSet(std::move(ids), std::move(data), sub_idx ? std::optional(std::move(subgroup)) : std::nullopt,
                      reg_idx ? std::optional(std::move(region)) : std::nullopt);
}

std::string embeddings_csv(const EmbeddingSet& set, const std::string& id_column) {
  std::string out = quote_field(id_column);
  if (set.subgroup()) out += ",subgroup";
  if (set.region()) out += ",region";
  for (std::size_t j = 0; j < set.dim(); ++j) out += ",f" + std::to_string(j);
  out += "\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    out += quote_field(set.ids()[i]);
    if (set.subgroup()) out += "," + quote_field((*set.subgroup())[i]);
    if (set.region()) out += "," + quote_field((*set.region())[i]);
    for (std::size_t j = 0; j < set.dim(); ++j) {
      out += "," + exact_number(set.data()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out += "\n";
  }
  return out;
}

void write_embeddings(const EmbeddingSet& set, const fs::path& path, const std::string& id_column) {
  write_file_atomic(path, embeddings_csv(set, id_column));
}

RecordTable read_record_table(const fs::path& path, const std::map<std::string, ColumnKind>& schema,
                              const std::string& missing_sentinel) {
  const auto rows = read_delimited(path);
  if (rows.empty()) throw Error(ErrorCode::kParse, path.string() + ": missing header row");
  const auto& header = rows.front();
  for (const auto& [name, kind] : schema) {
    if (!header_index(header, name)) {
      throw Error(ErrorCode::kParse, path.string() + ": schema column \"" + name + "\" not in header");
    }
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw Error(ErrorCode::kParse, path.string() + ": row " + std::to_string(r + 1) + " has " +
                                         std::to_string(rows[r].size()) + " fields, expected " +
                                         std::to_string(header.size()));
    }
  }
  auto is_missing = [&](const std::string& s) { return s.empty() || s == missing_sentinel; };

  std::vector<Column> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    ColumnKind kind;
    if (auto it = schema.find(header[c]); it != schema.end()) {
      kind = it->second;
    } else {
      kind = ColumnKind::kNumeric;
      for (std::size_t r = 1; r < rows.size(); ++r) {
        if (!is_missing(rows[r][c]) && !parse_number(rows[r][c])) {
          kind = ColumnKind::kCategorical;
          break;
        }
      }
    }
    columns.push_back({header[c], kind});
  }

  std::vector<std::vector<Cell>> cells;
  cells.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::vector<Cell> row;
    row.reserve(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto& text = rows[r][c];
      if (is_missing(text)) {
        row.emplace_back(std::monostate{});
      } else if (columns[c].kind == ColumnKind::kNumeric) {
        const auto v = parse_number(text);
        if (!v) {
          throw Error(ErrorCode::kParse, path.string() + ": parse error at row " + std::to_string(r + 1) + " col " +
                                             std::to_string(c + 1) + ": non-numeric value \"" + text + "\"");
        }
        row.emplace_back(*v);
      } else {
        row.emplace_back(text);
      }
    }
    cells.push_back(std::move(row));
  }
  return RecordTable(std::move(columns), std::move(cells));
}

std::string record_table_csv(const RecordTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.cols(); ++c) out += (c ? "," : "") + quote_field(table.columns()[c].name);
  out += "\n";
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      if (c) out += ",";
      const auto& cell = table.at(r, c);
      if (const auto* d = std::get_if<double>(&cell)) {
        out += exact_number(*d);
      } else if (const auto* s = std::get_if<std::string>(&cell)) {
        out += quote_field(*s);
      }
    }
    out += "\n";
  }
  return out;
}

void write_record_table(const RecordTable& table, const fs::path& path) {
  write_file_atomic(path, record_table_csv(table));
}

Eigen::MatrixXd read_class_probabilities(const fs::path& path, const std::string& id_column) {
  return read_embeddings(path, id_column).data();
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

void check_keys(const json& obj, const std::vector<std::string_view>& allowed, const std::string& where) {
  if (!obj.is_object()) config_error(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw Error(ErrorCode::kUnknownKey, "unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

std::size_t get_count(const json& j, const std::string& where, std::size_t min = 1) {
  if (!j.is_number_integer() || j.get<long long>() < static_cast<long long>(min)) {
    config_error(where + " must be an integer >= " + std::to_string(min));
  }
  return static_cast<std::size_t>(j.get<long long>());
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) config_error(where + " must be a number");
  return j.get<double>();
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) config_error(where + " must be a string");
  return j.get<std::string>();
}

std::vector<std::string> get_strings(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where + " must be a list of strings");
  std::vector<std::string> out;
  for (const auto& v : j) out.push_back(get_string(v, where));
  return out;
}

fs::path get_path(const json& j, const std::string& where, const fs::path& base) {
  fs::path p(get_string(j, where));
  return p.is_absolute() ? p : base / p;
}

// Which parameter keys each metric accepts.
std::vector<std::string_view> allowed_params(std::string_view metric) {
  if (metric == "EarthMoversDistance") return {"mode"};
  if (metric == "JensenShannonDivergence" || metric == "Entropy") return {"bins"};
  if (metric == "Precision" || metric == "Recall" || metric == "Coverage" || metric == "RarityScore") return {"k"};
  if (metric == "ConvexHullVolume") return {"reduce_to"};
  if (metric == "DPPScore") return {"ridge"};
  if (metric == "ClusterBalance") return {"k_clusters"};
  if (metric == "DifferentialPrivacyScore") return {"tau"};
  return {};
}

MetricParams parse_params(std::string_view metric, const json& j) {
  const std::string where = "parameters of " + std::string(metric);
  check_keys(j, allowed_params(metric), where);
  MetricParams p;
  if (j.contains("mode")) {
    const auto mode = get_string(j["mode"], where + ".mode");
    if (mode == "per-dimension") {
      p.transport = TransportMode::kPerDimension;
    } else if (mode == "exact-matching") {
      p.transport = TransportMode::kExactMatching;
    } else {
      config_error(where + ".mode must be \"per-dimension\" or \"exact-matching\"");
    }
  }
  if (j.contains("bins")) p.bins = get_count(j["bins"], where + ".bins");
  if (j.contains("k")) p.k = get_count(j["k"], where + ".k");
  if (j.contains("reduce_to")) {
    p.reduce_to = get_count(j["reduce_to"], where + ".reduce_to");
    if (*p.reduce_to > 3) config_error(where + ".reduce_to must be 1, 2, or 3");
  }
  if (j.contains("ridge")) {
    p.ridge = get_number(j["ridge"], where + ".ridge");
    if (*p.ridge < 0) config_error(where + ".ridge must be nonnegative");
  }
  if (j.contains("k_clusters")) p.k_clusters = get_count(j["k_clusters"], where + ".k_clusters", 2);
  if (j.contains("tau")) {
    p.tau = get_number(j["tau"], where + ".tau");
    if (*p.tau < 0) config_error(where + ".tau must be nonnegative");
  }
  return p;
}

Predicate parse_predicate(const json& j, const std::string& where) {
  check_keys(j, {"field", "equals", "in"}, where);
  if (!j.contains("field")) config_error(where + " needs \"field\"");
  Predicate p{get_string(j["field"], where + ".field"), {}};
  if (j.contains("equals")) p.values.push_back(get_string(j["equals"], where + ".equals"));
  if (j.contains("in")) {
    auto more = get_strings(j["in"], where + ".in");
    p.values.insert(p.values.end(), more.begin(), more.end());
  }
  if (p.values.empty()) config_error(where + " needs \"equals\" or \"in\"");
  return p;
}

RuleBody parse_rule_body(const json& j, const std::string& where, bool top_level) {
  if (!j.is_object() || !j.contains("kind")) config_error(where + " needs a \"kind\"");
  const auto kind = get_string(j["kind"], where + ".kind");
  auto allowed = [&](std::initializer_list<std::string_view> keys) {
    std::vector<std::string_view> all(keys);
    all.push_back("kind");
    if (top_level) {
      all.push_back("id");
      all.push_back("severity");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (std::find(all.begin(), all.end(), it.key()) == all.end()) {
        throw Error(ErrorCode::kUnknownKey, "unknown key \"" + it.key() + "\" in " + where);
      }
    }
  };
  if (kind == "range") {
    allowed({"field", "min", "max"});
    RangeRule r;
    if (!j.contains("field")) config_error(where + " needs \"field\"");
    r.field = get_string(j["field"], where + ".field");
    if (j.contains("min")) r.min = get_number(j["min"], where + ".min");
    if (j.contains("max")) r.max = get_number(j["max"], where + ".max");
    if (!r.min && !r.max) config_error(where + ": range needs at least one bound");
    return RuleBody{r};
  }
  if (kind == "allowed_set") {
    allowed({"field", "values"});
    if (!j.contains("field") || !j.contains("values")) config_error(where + " needs \"field\" and \"values\"");
    return RuleBody{AllowedSetRule{get_string(j["field"], where + ".field"), get_strings(j["values"], where + ".values")}};
  }
  if (kind == "linear") {
    allowed({"weights", "bound", "sense"});
    if (!j.contains("weights") || !j.contains("bound")) config_error(where + " needs \"weights\" and \"bound\"");
    LinearRule r;
    check_keys(j["weights"], {}, where + ".weights");  // object check only
    for (auto it = j["weights"].begin(); it != j["weights"].end(); ++it) {
      r.weights.emplace_back(it.key(), get_number(it.value(), where + ".weights." + it.key()));
    }
    r.bound = get_number(j["bound"], where + ".bound");
    const auto sense = j.contains("sense") ? get_string(j["sense"], where + ".sense") : std::string("<=");
    if (sense == "<=") {
      r.sense = Sense::kLessEqual;
    } else if (sense == ">=") {
      r.sense = Sense::kGreaterEqual;
    } else {
      config_error(where + ".sense must be \"<=\" or \">=\"");
    }
    return RuleBody{r};
  }
  if (kind == "implication") {
    allowed({"when", "then"});
    if (!j.contains("when") || !j.contains("then")) config_error(where + " needs \"when\" and \"then\"");
    ImplicationRule r;
    r.when = parse_predicate(j["when"], where + ".when");
    r.then = std::make_shared<const RuleBody>(parse_rule_body(j["then"], where + ".then", false));
    return RuleBody{r};
  }
  config_error(where + ": unknown constraint kind \"" + kind + "\"");
}

}  // namespace

ConstraintRuleSet parse_rules(const json& rules);

ConstraintRuleSet parse_rules(const json& rules) {
  if (!rules.is_array()) config_error("constraints.rules must be a list");
  ConstraintRuleSet set;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const std::string where = "constraints.rules[" + std::to_string(i) + "]";
    const auto& j = rules[i];
    ConstraintRule rule;
    rule.body = parse_rule_body(j, where, true);
    if (!j.contains("id")) config_error(where + " needs an \"id\"");
    rule.id = get_string(j["id"], where + ".id");
    if (j.contains("severity")) rule.severity = get_string(j["severity"], where + ".severity");
    if (!ids.insert(rule.id).second) config_error("duplicate constraint id \"" + rule.id + "\"");
    if (implication_depth(rule.body) > kMaxImplicationDepth) {
      config_error(where + ": implications nest deeper than " + std::to_string(kMaxImplicationDepth));
    }
    set.rules.push_back(std::move(rule));
  }
  return set;
}

void check_thresholds(const Thresholds& t) {
  if (!(t.good > t.moderate)) {
    throw Error(ErrorCode::kThresholds, "thresholds not ordered (good=" + std::to_string(t.good) +
                                            " must exceed moderate=" + std::to_string(t.moderate) + ")");
  }
  if (t.moderate < 0 || t.good > 100) throw Error(ErrorCode::kThresholds, "thresholds must lie in [0, 100]");
}

bool EvalConfig::selected(std::string_view name) const {
  return std::any_of(metrics.begin(), metrics.end(), [&](const auto* m) { return m->name == name; });
}

const MetricParams& EvalConfig::params_for(std::string_view name) const {
  static const MetricParams kDefault;
  const auto it = params.find(std::string(name));
  return it == params.end() ? kDefault : it->second;
}

double EvalConfig::weight_for(std::string_view name) const {
  const auto it = weights.find(std::string(name));
  return it == weights.end() ? 1.0 : it->second;
}

namespace {

std::map<std::string, Bounds> parse_bounds(const json& j, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  std::map<std::string, Bounds> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    metric(it.key());
    const auto& v = it.value();
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      config_error(where + "." + it.key() + " must be [lo, hi]");
    }
    Bounds b{v[0].get<double>(), v[1].get<double>()};
    if (!(b.lo < b.hi)) config_error(where + "." + it.key() + ": lo must be below hi");
    out[it.key()] = b;
  }
  return out;
}

}  // namespace

EvalConfig parse_eval_config(const json& doc, const fs::path& base_dir) {
  check_keys(doc, {"metrics", "seed", "threads", "embeddings", "table", "constraints", "completeness", "compliance",
                   "consistency", "documentation", "normalization", "normalization_file", "weights", "thresholds",
                   "aggregation", "calibration"},
             "config");
  EvalConfig cfg;
  // Worker count never changes results, so it stays out of the digest.
  json digest_doc = doc;
  digest_doc.erase("threads");
  cfg.digest = sha256_hex(dump_canonical_json(digest_doc));

  if (!doc.contains("metrics") || !doc["metrics"].is_object() || doc["metrics"].empty()) {
    config_error("config needs a nonempty \"metrics\" object");
  }
  for (auto it = doc["metrics"].begin(); it != doc["metrics"].end(); ++it) {
    metric(it.key());
    cfg.params[it.key()] = parse_params(it.key(), it.value().is_null() ? json::object() : it.value());
  }
  for (const auto& m : metric_catalog()) {
    if (cfg.params.contains(std::string(m.name))) cfg.metrics.push_back(&m);
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0)) {
      config_error("seed must be a nonnegative integer");
    }
    cfg.seed = doc["seed"].get<std::uint64_t>();
  } else if (const char* env = std::getenv(kSeedEnvironmentVariable)) {
    const std::string_view text(env);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      config_error(std::string(kSeedEnvironmentVariable) + " must be a nonnegative integer");
    }
    cfg.seed = v;
  }
  if (doc.contains("threads")) cfg.threads = get_count(doc["threads"], "threads");

  if (doc.contains("embeddings")) {
    const auto& e = doc["embeddings"];
    check_keys(e, {"id_column", "subgroup_column", "region_column", "reduce_to", "class_probabilities"}, "embeddings");
    if (e.contains("id_column")) cfg.id_column = get_string(e["id_column"], "embeddings.id_column");
    if (e.contains("subgroup_column")) cfg.subgroup_column = get_string(e["subgroup_column"], "embeddings.subgroup_column");
    if (e.contains("region_column")) cfg.region_column = get_string(e["region_column"], "embeddings.region_column");
    if (e.contains("reduce_to")) cfg.reduce_to = get_count(e["reduce_to"], "embeddings.reduce_to");
    if (e.contains("class_probabilities")) {
      cfg.class_probabilities = get_path(e["class_probabilities"], "embeddings.class_probabilities", base_dir);
    }
  }

  if (doc.contains("table")) {
    const auto& t = doc["table"];
    check_keys(t, {"schema", "missing_sentinel", "reference", "subgroup_column"}, "table");
    if (t.contains("schema")) {
      if (!t["schema"].is_object()) config_error("table.schema must be an object");
      for (auto it = t["schema"].begin(); it != t["schema"].end(); ++it) {
        const auto kind = parse_column_kind(get_string(it.value(), "table.schema." + it.key()));
        if (!kind) config_error("table.schema." + it.key() + " must be numeric, categorical, or text");
        cfg.table_schema[it.key()] = *kind;
      }
    }
    if (t.contains("missing_sentinel")) cfg.missing_sentinel = get_string(t["missing_sentinel"], "table.missing_sentinel");
    if (t.contains("reference")) cfg.reference_table = get_path(t["reference"], "table.reference", base_dir);
    if (t.contains("subgroup_column")) cfg.table_subgroup_column = get_string(t["subgroup_column"], "table.subgroup_column");
  }
  if (!cfg.table_subgroup_column) cfg.table_subgroup_column = cfg.subgroup_column;

  if (doc.contains("constraints")) {
    const auto& c = doc["constraints"];
    check_keys(c, {"rules", "derive_from_reference"}, "constraints");
    if (c.contains("rules")) cfg.declared_rules = parse_rules(c["rules"]);
    if (c.contains("derive_from_reference")) {
      const auto& d = c["derive_from_reference"];
      check_keys(d, {"fields", "quantile_margin"}, "constraints.derive_from_reference");
      DeriveRangeSpec spec;
      if (!d.contains("fields")) config_error("constraints.derive_from_reference needs \"fields\"");
      spec.fields = get_strings(d["fields"], "constraints.derive_from_reference.fields");
      if (d.contains("quantile_margin")) {
        spec.quantile_margin = get_number(d["quantile_margin"], "constraints.derive_from_reference.quantile_margin");
        if (spec.quantile_margin < 0 || spec.quantile_margin >= 0.5) {
          config_error("constraints.derive_from_reference.quantile_margin must be in [0, 0.5)");
        }
      }
      cfg.derive_rules = std::move(spec);
    }
  }

  if (doc.contains("completeness")) {
    const auto& c = doc["completeness"];
    check_keys(c, {"required_fields", "populated_fraction"}, "completeness");
    if (c.contains("required_fields")) cfg.required_fields = get_strings(c["required_fields"], "completeness.required_fields");
    if (c.contains("populated_fraction")) {
      cfg.populated_fraction = get_number(c["populated_fraction"], "completeness.populated_fraction");
      if (cfg.populated_fraction < 0 || cfg.populated_fraction > 1) {
        config_error("completeness.populated_fraction must be in [0, 1]");
      }
    }
  }

  if (doc.contains("compliance")) {
    const auto& c = doc["compliance"];
    check_keys(c, {"quasi_identifiers", "sensitive_column", "declared_privacy"}, "compliance");
    if (c.contains("quasi_identifiers")) cfg.quasi_identifiers = get_strings(c["quasi_identifiers"], "compliance.quasi_identifiers");
    if (c.contains("sensitive_column")) cfg.sensitive_column = get_string(c["sensitive_column"], "compliance.sensitive_column");
    if (c.contains("declared_privacy")) {
      const auto& d = c["declared_privacy"];
      const std::string w = "compliance.declared_privacy";
      check_keys(d, {"epsilon", "delta", "anonymization_method", "standards", "data_format"}, w);
      if (d.contains("epsilon")) cfg.declared_privacy.epsilon = get_number(d["epsilon"], w + ".epsilon");
      if (d.contains("delta")) cfg.declared_privacy.delta = get_number(d["delta"], w + ".delta");
      if (d.contains("anonymization_method")) {
        cfg.declared_privacy.anonymization_method = get_string(d["anonymization_method"], w + ".anonymization_method");
      }
      if (d.contains("standards")) cfg.declared_privacy.standards = get_strings(d["standards"], w + ".standards");
      if (d.contains("data_format")) cfg.declared_privacy.data_format = get_string(d["data_format"], w + ".data_format");
    }
  }

  if (doc.contains("consistency")) {
    const auto& c = doc["consistency"];
    check_keys(c, {"base_metrics", "bootstrap_replicates"}, "consistency");
    if (c.contains("base_metrics")) {
      cfg.consistency_base = get_strings(c["base_metrics"], "consistency.base_metrics");
      for (const auto& name : cfg.consistency_base) {
        metric(name);
        if (!cfg.params.contains(name)) config_error("consistency base metric \"" + name + "\" is not selected");
      }
    }
    if (c.contains("bootstrap_replicates")) {
      cfg.bootstrap_replicates = get_count(c["bootstrap_replicates"], "consistency.bootstrap_replicates", 2);
    }
  }

  if (doc.contains("documentation")) {
    check_keys(doc["documentation"], {"manifest"}, "documentation");
    if (doc["documentation"].contains("manifest")) {
      cfg.documentation_manifest = get_path(doc["documentation"]["manifest"], "documentation.manifest", base_dir);
    }
  }

  if (doc.contains("normalization_file")) {
    const auto path = get_path(doc["normalization_file"], "normalization_file", base_dir);
    const auto file = parse_json_file(path);
    if (!file.is_object() || !file.contains("normalization")) {
      config_error(path.string() + " has no \"normalization\" object");
    }
    cfg.bounds = parse_bounds(file["normalization"], "normalization_file");
  }
  if (doc.contains("normalization")) {
    for (auto& [name, b] : parse_bounds(doc["normalization"], "normalization")) cfg.bounds[name] = b;
  }

  if (doc.contains("weights")) {
    if (!doc["weights"].is_object()) config_error("weights must be an object");
    for (auto it = doc["weights"].begin(); it != doc["weights"].end(); ++it) {
      metric(it.key());
      const double w = get_number(it.value(), "weights." + it.key());
      if (w < 0) config_error("weights." + it.key() + " must be nonnegative");
      cfg.weights[it.key()] = w;
    }
  }
  for (auto c : all_criteria()) {
    bool any = false, positive = false;
    for (const auto* m : cfg.metrics) {
      if (m->criterion != c) continue;
      any = true;
      positive = positive || cfg.weight_for(m->name) > 0;
    }
    if (any && !positive) config_error("criterion " + std::string(to_string(c)) + " has no positive weight");
  }

  if (doc.contains("thresholds")) {
    const auto& t = doc["thresholds"];
    check_keys(t, {"good", "moderate"}, "thresholds");
    if (t.contains("good")) cfg.thresholds.good = get_number(t["good"], "thresholds.good");
    if (t.contains("moderate")) cfg.thresholds.moderate = get_number(t["moderate"], "thresholds.moderate");
  }
  check_thresholds(cfg.thresholds);

  if (doc.contains("aggregation")) {
    const auto mode = parse_aggregation_mode(get_string(doc["aggregation"], "aggregation"));
    if (!mode) config_error("aggregation must be \"arithmetic\" or \"geometric\"");
    cfg.aggregation = *mode;
  }
  if (doc.contains("calibration")) {
    check_keys(doc["calibration"], {"splits"}, "calibration");
    if (doc["calibration"].contains("splits")) cfg.calibration_splits = get_count(doc["calibration"]["splits"], "calibration.splits");
  }
  return cfg;
}

EvalConfig read_eval_config(const fs::path& path) {
  return parse_eval_config(parse_json_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

json value_to_json(const MetricValue& v) {
  switch (v.kind) {
    case MetricValue::Kind::kFinite: return v.value;
    case MetricValue::Kind::kPositiveInfinity: return "+inf";
    case MetricValue::Kind::kUndefined: return nullptr;
  }
  return nullptr;
}

std::string_view status_of(const MetricValue& v) {
  switch (v.kind) {
    case MetricValue::Kind::kFinite: return "ok";
    case MetricValue::Kind::kPositiveInfinity: return "infinite";
    case MetricValue::Kind::kUndefined: return "undefined";
  }
  return "undefined";
}

[[noreturn]] void report_error(const std::string& msg) { throw Error(ErrorCode::kParse, "report: " + msg); }

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) report_error(std::string("missing \"") + key + "\"");
  return obj[key];
}

}  // namespace

json report_to_json(const QualityReport& report) {
  json doc;
  doc["format"] = kReportFormat;
  doc["config_digest"] = report.config_digest;
  doc["seed"] = report.seed;
  doc["thresholds"] = {{"good", report.thresholds.good}, {"moderate", report.thresholds.moderate}};
  doc["aggregation"] = std::string(to_string(report.aggregation));
  doc["declared_privacy"] = report.declared_privacy;
  doc["notes"] = report.notes;
  json scopes = json::array();
  for (const auto& sc : report.scopes) {
    json metrics = json::array();
    for (const auto& m : sc.metrics) {
      json jm;
      jm["name"] = std::string(m.descriptor->name);
      jm["label"] = std::string(m.descriptor->label);
      jm["criterion"] = std::string(to_string(m.descriptor->criterion));
      jm["space"] = std::string(to_string(m.descriptor->space));
      jm["arity"] = std::string(to_string(m.descriptor->arity));
      jm["direction"] = std::string(to_string(m.descriptor->direction));
      jm["image_only"] = m.descriptor->image_only;
      jm["value"] = value_to_json(m.value);
      jm["status"] = std::string(status_of(m.value));
      if (!m.value.is_defined()) jm["reason"] = m.value.reason;
      jm["normalized"] = m.normalized ? json(*m.normalized) : json(nullptr);
      jm["diagnostics"] = json::object();
      for (const auto& [k, v] : m.diagnostics) {
        jm["diagnostics"][k] = std::isfinite(v) ? json(v) : json(v > 0 ? "+inf" : (v < 0 ? "-inf" : "nan"));
      }
      metrics.push_back(std::move(jm));
    }
    json criteria = json::array();
    for (const auto& c : sc.criteria) {
      criteria.push_back({{"criterion", std::string(to_string(c.criterion))},
                          {"score", c.score ? json(*c.score) : json(nullptr)},
                          {"verdict", std::string(to_string(c.verdict))},
                          {"included", c.included},
                          {"excluded", c.excluded}});
    }
    scopes.push_back({{"scope", sc.scope.to_string()}, {"metrics", std::move(metrics)}, {"criteria", std::move(criteria)}});
  }
  doc["scopes"] = std::move(scopes);
  return doc;
}

QualityReport report_from_json(const json& doc) {
  if (!doc.is_object() || field(doc, "format") != kReportFormat) report_error("unsupported format");
  QualityReport r;
  r.config_digest = field(doc, "config_digest").get<std::string>();
  r.seed = field(doc, "seed").get<std::uint64_t>();
  r.thresholds.good = field(field(doc, "thresholds"), "good").get<double>();
  r.thresholds.moderate = field(field(doc, "thresholds"), "moderate").get<double>();
  const auto mode = parse_aggregation_mode(field(doc, "aggregation").get<std::string>());
  if (!mode) report_error("bad aggregation mode");
  r.aggregation = *mode;
  r.declared_privacy = field(doc, "declared_privacy").get<std::map<std::string, std::string>>();
  r.notes = field(doc, "notes").get<std::vector<std::string>>();
  for (const auto& js : field(doc, "scopes")) {
    ScopeReport sc;
    sc.scope = Scope::parse(field(js, "scope").get<std::string>());
    for (const auto& jm : field(js, "metrics")) {
      MetricResult m;
      m.descriptor = find_metric(field(jm, "name").get<std::string>());
      if (!m.descriptor) report_error("unknown metric " + jm["name"].dump());
      m.scope = sc.scope;
      const auto status = field(jm, "status").get<std::string>();
      if (status == "ok") {
        m.value = MetricValue::finite(field(jm, "value").get<double>());
      } else if (status == "infinite") {
        m.value = MetricValue::infinity();
      } else if (status == "undefined") {
        m.value = MetricValue::undefined(field(jm, "reason").get<std::string>());
      } else {
        report_error("bad metric status " + status);
      }
      if (!field(jm, "normalized").is_null()) m.normalized = jm["normalized"].get<double>();
      for (auto it = field(jm, "diagnostics").begin(); it != jm["diagnostics"].end(); ++it) {
        double v;
        if (it.value().is_number()) {
          v = it.value().get<double>();
        } else {
          const auto s = it.value().get<std::string>();
          v = s == "+inf" ? INFINITY : (s == "-inf" ? -INFINITY : NAN);
        }
        m.diagnostics[it.key()] = v;
      }
      sc.metrics.push_back(std::move(m));
    }
    for (const auto& jc : field(js, "criteria")) {
      CriterionAggregate c;
      const auto crit = parse_criterion(field(jc, "criterion").get<std::string>());
      const auto verdict = parse_verdict(field(jc, "verdict").get<std::string>());
      if (!crit || !verdict) report_error("bad criterion entry");
      c.criterion = *crit;
      c.verdict = *verdict;
      if (!field(jc, "score").is_null()) c.score = jc["score"].get<double>();
      c.included = field(jc, "included").get<std::vector<std::string>>();
      c.excluded = field(jc, "excluded").get<std::vector<std::string>>();
      sc.criteria.push_back(std::move(c));
    }
    r.scopes.push_back(std::move(sc));
  }
  return r;
}

std::string serialize_report(const QualityReport& report) { return dump_canonical_json(report_to_json(report)); }

QualityReport parse_report(const std::string& text) {
  try {
    return report_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("report: ") + e.what());
  }
}

void write_report(const QualityReport& report, const fs::path& path) { write_file_atomic(path, serialize_report(report)); }

QualityReport read_report(const fs::path& path) { return parse_report(read_text_file(path)); }

std::string report_digest(const QualityReport& report) { return sha256_hex(serialize_report(report)); }

}  // namespace smdcard
