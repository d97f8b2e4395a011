#include "smdcard/card.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "smdcard/error.hpp"
#include "smdcard/ingest.hpp"

namespace smdcard {

using nlohmann::json;

namespace {

const std::vector<CardSectionSpec>& sections_table() {
  static const std::vector<CardSectionSpec> kSections = {
      {1, "general", "Synthetic Data General Information",
       {"Name", "Release Date", "Version History", "Dataset Size", "Dataset Modality", "Dataset Provenance",
        "Dataset Intended Use", "Dataset Labels", "Attribution and Licensing", "Point of Contact"}},
      {2, "", "Data Quality Evaluation (7 Cs) Quantitative Results",
       {"Congruence", "Coverage", "Constraint", "Completeness", "Compliance", "Comprehension", "Consistency"}},
      {3, "task_based", "Task-based Evaluation (Quantitative Results)", {"Task Performance", "Task-Specific Metrics"}},
      {4, "human_based", "Human-based Evaluation (Qualitative Results)",
       {"Human Study Design", "Reader Study Results", "Observations & Failure Cases"}},
      {5, "ethical", "Ethical, Legal, and Practical Considerations",
       {"Privacy & Anonymization", "Biases", "Limitations", "Recommendations"}},
      {6, "usage", "Synthetic Dataset Usage",
       {"Repository Access", "Preprocessing Requirements", "User Documentation", "Intended Audience"}},
      {7, "generation", "Synthetic Dataset Training & Validation Process",
       {"Generation Method", "Training & Validation Process"}},
      {8, "reference", "Reference Dataset General Information",
       {"Purpose", "Origin & Source", "Dataset Size", "Clinical Population", "Acquisition Devices",
        "Reference Standard", "Ground Truth Labels", "Metadata", "Preprocessing", "Known Limitations"}},
  };
  return kSections;
}

const CardSectionSpec* find_section(std::string_view key) {
  for (const auto& s : sections_table()) {
    if (!s.key.empty() && s.key == key) return &s;
  }
  return nullptr;
}

[[noreturn]] void manifest_error(const std::string& msg) { throw Error(ErrorCode::kManifest, msg); }

std::string scalar_text(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  manifest_error(where + " must be text");
}

std::string trimmed(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string general(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string metric_display_name(const MetricDescriptor& m) {
  if (m.name == "FrechetDistance") return "FrechetDistance(embeddings)";
  return std::string(m.name);
}

std::string value_text(const MetricResult& m) {
  switch (m.value.kind) {
    case MetricValue::Kind::kFinite: return general(m.value.value);
    case MetricValue::Kind::kPositiveInfinity:
      return m.descriptor->name == "PeakSignalToNoiseRatio" ? "+inf (identical)" : "+inf";
    case MetricValue::Kind::kUndefined: return "undefined (" + m.value.reason + ")";
  }
  return "undefined";
}

std::string score_text(const CriterionAggregate& c) {
  if (!c.score) return "not evaluated";
  return fixed1(*c.score) + " (" + std::string(to_string(c.verdict)) + ")";
}

const CriterionAggregate* find_criterion(const ScopeReport& scope, Criterion c) {
  for (const auto& a : scope.criteria) {
    if (a.criterion == c) return &a;
  }
  return nullptr;
}

std::string privacy_text(const std::map<std::string, std::string>& record) {
  static const char* kKeys[] = {"epsilon", "delta", "anonymization_method", "standards", "data_format"};
  static const char* kNames[] = {"epsilon", "delta", "anonymization method", "standards", "data format"};
  std::string out;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto it = record.find(kKeys[i]);
    if (it == record.end()) continue;
    if (!out.empty()) out += "; ";
    out += std::string(kNames[i]) + ": " + it->second;
  }
  if (auto it = record.find("verification"); it != record.end()) out += " [" + it->second + "]";
  return out;
}

}  // namespace

std::span<const CardSectionSpec> card_sections() { return sections_table(); }

std::vector<std::string> card_field_labels() {
  std::vector<std::string> out;
  for (const auto& s : sections_table()) {
    for (auto l : s.labels) out.emplace_back(l);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::optional<std::string> CardManifest::text(std::string_view section, std::string_view label) const {
  const std::string s(section), l(label);
  if (!doc.contains(s) || !doc[s].contains(l)) return std::nullopt;
  const auto& v = doc[s][l];
  std::string out;
  if (s == "generation" && l == "Generation Method" && v.is_object()) {
    out = v.value("description", std::string());
  } else if (s == "task_based" && l == "Task-Specific Metrics" && v.is_array()) {
    for (const auto& t : task_metrics()) {
      if (!out.empty()) out += "; ";
      out += t.name + " = " + t.value;
      if (!t.threshold.empty()) out += " (threshold " + t.threshold + ")";
    }
  } else {
    out = scalar_text(v, s + "." + l);
  }
  out = trimmed(std::move(out));
  if (out.empty()) return std::nullopt;
  return out;
}

GenerationMethod CardManifest::generation_method() const {
  GenerationMethod g;
  if (!doc.contains("generation") || !doc["generation"].contains("Generation Method")) return g;
  const auto& v = doc["generation"]["Generation Method"];
  if (v.is_string()) {
    g.description = trimmed(v.get<std::string>());
    return g;
  }
  g.description = trimmed(v.value("description", std::string()));
  if (v.contains("parameters")) {
    for (auto it = v["parameters"].begin(); it != v["parameters"].end(); ++it) {
      g.parameters.emplace_back(it.key(), scalar_text(it.value(), "Generation Method.parameters." + it.key()));
    }
  }
  return g;
}

std::vector<TaskMetric> CardManifest::task_metrics() const {
  std::vector<TaskMetric> out;
  if (!doc.contains("task_based") || !doc["task_based"].contains("Task-Specific Metrics")) return out;
  const auto& v = doc["task_based"]["Task-Specific Metrics"];
  if (!v.is_array()) return out;
  for (const auto& t : v) {
    out.push_back({scalar_text(t.at("name"), "Task-Specific Metrics.name"),
                   t.contains("value") ? scalar_text(t["value"], "Task-Specific Metrics.value") : std::string(),
                   t.contains("threshold") ? scalar_text(t["threshold"], "Task-Specific Metrics.threshold")
                                           : std::string()});
  }
  return out;
}

CardManifest parse_card_manifest(const json& doc) {
  if (!doc.is_object()) manifest_error("manifest must be an object");
  CardManifest m;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() == "report_digest") {
      if (!it.value().is_string()) manifest_error("report_digest must be text");
      m.report_digest = it.value().get<std::string>();
      continue;
    }
    const auto* spec = find_section(it.key());
    if (!spec) manifest_error("unknown manifest key \"" + it.key() + "\"");
    if (!it.value().is_object()) manifest_error("manifest section \"" + it.key() + "\" must be an object");
    for (auto f = it.value().begin(); f != it.value().end(); ++f) {
      if (std::find(spec->labels.begin(), spec->labels.end(), f.key()) == spec->labels.end()) {
        manifest_error("unknown field \"" + f.key() + "\" in manifest section \"" + it.key() + "\"");
      }
      const std::string where = it.key() + "." + f.key();
      const auto& v = f.value();
      if (it.key() == "generation" && f.key() == "Generation Method" && v.is_object()) {
        for (auto g = v.begin(); g != v.end(); ++g) {
          if (g.key() != "description" && g.key() != "parameters") {
            manifest_error("unknown key \"" + g.key() + "\" in " + where);
          }
        }
        if (v.contains("description")) scalar_text(v["description"], where + ".description");
        if (v.contains("parameters")) {
          if (!v["parameters"].is_object()) manifest_error(where + ".parameters must be an object");
          for (auto p = v["parameters"].begin(); p != v["parameters"].end(); ++p) {
            scalar_text(p.value(), where + ".parameters." + p.key());
          }
        }
      } else if (it.key() == "task_based" && f.key() == "Task-Specific Metrics" && v.is_array()) {
        for (const auto& t : v) {
          if (!t.is_object() || !t.contains("name")) manifest_error(where + " entries need a \"name\"");
          for (auto k = t.begin(); k != t.end(); ++k) {
            if (k.key() != "name" && k.key() != "value" && k.key() != "threshold") {
              manifest_error("unknown key \"" + k.key() + "\" in " + where);
            }
            scalar_text(k.value(), where + "." + k.key());
          }
        }
      } else {
        scalar_text(v, where);
      }
    }
  }
  m.doc = doc;
  m.doc.erase("report_digest");
  if (!m.text("general", "Name")) manifest_error("manifest missing section-1 field \"Name\"");
  return m;
}

CardManifest read_card_manifest(const std::filesystem::path& path) {
  const auto doc = parse_json_file(path);
  if (doc.is_object() && doc.contains("smd_card")) {
    const auto& card = doc["smd_card"];
    auto m = parse_card_manifest(card.at("manifest"));
    if (card.contains("report_digest") && card["report_digest"].is_string() &&
        !card["report_digest"].get<std::string>().empty()) {
      m.report_digest = card["report_digest"].get<std::string>();
    }
    return m;
  }
  return parse_card_manifest(doc);
}

// ---------------------------------------------------------------------------
// Clarity rubric
// ---------------------------------------------------------------------------

ClarityResult documentation_clarity(const CardManifest& manifest) {
  ClarityResult r;
  const auto gen = manifest.generation_method();
  std::size_t reference_fields = 0;
  for (auto label : find_section("reference")->labels) {
    if (manifest.text("reference", label)) ++reference_fields;
  }
  r.items = {
      {"generation method described", !gen.description.empty()},
      {"generation parameters enumerated", !gen.parameters.empty()},
      {"training/validation process described", manifest.text("generation", "Training & Validation Process").has_value()},
      {"version history present", manifest.text("general", "Version History").has_value()},
      {"reference-dataset section populated", reference_fields >= kReferenceFieldsForPopulated},
      {"preprocessing documented", manifest.text("usage", "Preprocessing Requirements").has_value() ||
                                       manifest.text("reference", "Preprocessing").has_value()},
      {"license present", manifest.text("general", "Attribution and Licensing").has_value()},
      {"contact present", manifest.text("general", "Point of Contact").has_value()},
      {"known limitations stated", manifest.text("ethical", "Limitations").has_value() ||
                                       manifest.text("reference", "Known Limitations").has_value()},
  };
  const auto satisfied = std::count_if(r.items.begin(), r.items.end(), [](const auto& i) { return i.satisfied; });
  r.score = std::min(10, 1 + static_cast<int>(satisfied));
  return r;
}

// ---------------------------------------------------------------------------
// Card building
// ---------------------------------------------------------------------------

CardDocument build_card(const CardManifest& manifest, const std::optional<QualityReport>& report) {
  CardDocument card;
  card.manifest = manifest;
  card.report = report;
  if (report) {
    card.report_digest = report_digest(*report);
    if (manifest.report_digest && *manifest.report_digest != card.report_digest) {
      throw Error(ErrorCode::kReportChanged, "report changed since card built (pinned " + *manifest.report_digest +
                                                 ", got " + card.report_digest + ")");
    }
  }
  card.clarity = documentation_clarity(manifest);

  for (const auto& spec : sections_table()) {
    CardSection section{spec.number, std::string(spec.title), {}};
    for (auto label : spec.labels) {
      CardEntry e{std::string(label), kNotProvided, false};
      if (spec.number == 2) {
        if (report) {
          const auto crit = parse_criterion(label);
          const auto* agg = crit ? find_criterion(report->global(), *crit) : nullptr;
          e.text = agg ? score_text(*agg) : "not evaluated";
          if (crit == Criterion::kCompliance) e.text += "; declared privacy: " + privacy_text(report->declared_privacy);
          if (crit == Criterion::kComprehension) {
            e.text += "; documentation clarity rubric " + std::to_string(card.clarity.score) + "/10";
          }
          e.provided = true;
        } else {
          e.text = "not evaluated";
        }
      } else if (auto t = manifest.text(spec.key, label)) {
        e.text = *t;
        e.provided = true;
        if (spec.key == "generation" && label == "Generation Method") {
          const auto gen = manifest.generation_method();
          if (!gen.parameters.empty()) {
            std::string params;
            for (const auto& [k, v] : gen.parameters) params += (params.empty() ? "" : ", ") + k + "=" + v;
            e.text += " (parameters: " + params + ")";
          }
        }
      } else if (spec.key == "generation" && label == "Generation Method") {
        const auto gen = manifest.generation_method();
        if (!gen.parameters.empty()) {
          std::string params;
          for (const auto& [k, v] : gen.parameters) params += (params.empty() ? "" : ", ") + k + "=" + v;
          e.text = "parameters: " + params;
          e.provided = true;
        }
      }
      section.entries.push_back(std::move(e));
    }
    card.sections.push_back(std::move(section));
  }
  return card;
}

std::optional<CardFormat> parse_card_format(std::string_view s) {
  if (s == "structured" || s == "json") return CardFormat::kStructured;
  if (s == "md" || s == "markdown") return CardFormat::kMarkdown;
  if (s == "html") return CardFormat::kHtml;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    if (c == '\n') {
      out += "<br>";
      continue;
    }
    out += c;
  }
  return out;
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct MetricRow {
  std::string criterion, metric, catalog_label, value, normalized, direction, criterion_score, verdict;
};

std::vector<MetricRow> metric_rows(const ScopeReport& scope) {
  std::vector<MetricRow> rows;
  for (const auto& m : scope.metrics) {
    const auto* agg = find_criterion(scope, m.descriptor->criterion);
    rows.push_back({std::string(to_string(m.descriptor->criterion)), metric_display_name(*m.descriptor),
                    std::string(m.descriptor->label), value_text(m),
                    m.normalized ? fixed1(*m.normalized) : std::string("excluded"),
                    std::string(to_string(m.descriptor->direction)),
                    agg && agg->score ? fixed1(*agg->score) : std::string("not evaluated"),
                    agg ? std::string(to_string(agg->verdict)) : std::string("not evaluated")});
  }
  return rows;
}

const char* kMetricHeaders[] = {"Criterion", "Metric", "Catalog row", "Raw value", "Normalized",
                                "Direction", "Criterion score", "Verdict"};

std::vector<std::string> row_cells(const MetricRow& r) {
  return {r.criterion, r.metric, r.catalog_label, r.value, r.normalized, r.direction, r.criterion_score, r.verdict};
}

std::string render_markdown(const CardDocument& card) {
  std::string out;
  for (const auto& section : card.sections) {
    if (!out.empty()) out += "\n";
    out += "## " + std::to_string(section.number) + ". " + section.title + "\n\n";
    out += "| Field | Value |\n|---|---|\n";
    for (const auto& e : section.entries) out += "| **" + e.label + "** | " + md_escape(e.text) + " |\n";
    if (section.number != 2 || !card.report) continue;

    const auto& report = *card.report;
    out += "\n### Metric results (global)\n\n|";
    for (const char* h : kMetricHeaders) out += std::string(" ") + h + " |";
    out += "\n|";
    for (std::size_t i = 0; i < std::size(kMetricHeaders); ++i) out += "---|";
    out += "\n";
    for (const auto& r : metric_rows(report.global())) {
      out += "|";
      for (const auto& c : row_cells(r)) out += " " + md_escape(c) + " |";
      out += "\n";
    }
    if (report.scopes.size() > 1) {
      out += "\n### Local and subgroup results\n\n| Scope | Criterion | Score | Verdict |\n|---|---|---|---|\n";
      for (std::size_t s = 1; s < report.scopes.size(); ++s) {
        for (const auto& c : report.scopes[s].criteria) {
          if (!c.score) continue;
          out += "| " + md_escape(report.scopes[s].scope.to_string()) + " | " + std::string(to_string(c.criterion)) +
                 " | " + fixed1(*c.score) + " | " + std::string(to_string(c.verdict)) + " |\n";
        }
      }
    }
    out += "\n### Documentation clarity rubric (" + std::to_string(card.clarity.score) + "/10)\n\n";
    for (const auto& item : card.clarity.items) out += std::string("- [") + (item.satisfied ? "x" : " ") + "] " + item.name + "\n";
    out += "\n### Interpretation notes\n\n";
    for (const auto& note : report.notes) out += "- " + md_escape(note) + "\n";
    out += "\nThresholds: good >= " + general(report.thresholds.good) + ", moderate >= " +
           general(report.thresholds.moderate) + "; aggregation: " + std::string(to_string(report.aggregation)) +
           "; seed: " + std::to_string(report.seed) + ".\n";
    out += "\nReport digest: `" + card.report_digest + "`; config digest: `" + report.config_digest + "`.\n";
  }
  return out;
}

std::string render_html(const CardDocument& card) {
  const auto name = card.manifest.text("general", "Name").value_or("SMD Card");
  std::string out =
      "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>SMD Card: " + html_escape(name) +
      "</title>\n<style>\n"
      "body{font-family:sans-serif;max-width:60em;margin:2em auto;padding:0 1em;color:#222}\n"
      "table{border-collapse:collapse;width:100%;margin:0.5em 0 1.5em}\n"
      "th,td{border:1px solid #ccc;padding:0.3em 0.5em;text-align:left;vertical-align:top}\n"
      "th[scope=row]{width:16em;background:#f5f5f5}\n"
      ".missing{color:#888;font-style:italic}\n"
      "</style>\n</head>\n<body>\n";
  out += "<header><p><strong>SMD Card: " + html_escape(name) + "</strong></p></header>\n";
  for (const auto& section : card.sections) {
    out += "<section>\n<h2>" + std::to_string(section.number) + ". " + html_escape(section.title) + "</h2>\n<table>\n";
    for (const auto& e : section.entries) {
      out += "<tr><th scope=\"row\">" + html_escape(e.label) + "</th><td" +
             (e.provided ? std::string() : std::string(" class=\"missing\"")) + ">" + html_escape(e.text) +
             "</td></tr>\n";
    }
    out += "</table>\n";
    if (section.number == 2 && card.report) {
      const auto& report = *card.report;
      out += "<h3>Metric results (global)</h3>\n<table>\n<tr>";
      for (const char* h : kMetricHeaders) out += std::string("<th scope=\"col\">") + h + "</th>";
      out += "</tr>\n";
      for (const auto& r : metric_rows(report.global())) {
        out += "<tr>";
        for (const auto& c : row_cells(r)) out += "<td>" + html_escape(c) + "</td>";
        out += "</tr>\n";
      }
      out += "</table>\n";
      if (report.scopes.size() > 1) {
        out += "<h3>Local and subgroup results</h3>\n<table>\n<tr><th scope=\"col\">Scope</th><th scope=\"col\">"
               "Criterion</th><th scope=\"col\">Score</th><th scope=\"col\">Verdict</th></tr>\n";
        for (std::size_t s = 1; s < report.scopes.size(); ++s) {
          for (const auto& c : report.scopes[s].criteria) {
            if (!c.score) continue;
            out += "<tr><td>" + html_escape(report.scopes[s].scope.to_string()) + "</td><td>" +
                   std::string(to_string(c.criterion)) + "</td><td>" + fixed1(*c.score) + "</td><td>" +
                   std::string(to_string(c.verdict)) + "</td></tr>\n";
          }
        }
        out += "</table>\n";
      }
      out += "<h3>Documentation clarity rubric (" + std::to_string(card.clarity.score) + "/10)</h3>\n<ul>\n";
      for (const auto& item : card.clarity.items) {
        out += std::string("<li>") + (item.satisfied ? "&#9745; " : "&#9744; ") + html_escape(item.name) + "</li>\n";
      }
      out += "</ul>\n<h3>Interpretation notes</h3>\n<ul>\n";
      for (const auto& note : report.notes) out += "<li>" + html_escape(note) + "</li>\n";
      out += "</ul>\n<p>Thresholds: good &gt;= " + general(report.thresholds.good) + ", moderate &gt;= " +
             general(report.thresholds.moderate) + "; aggregation: " + std::string(to_string(report.aggregation)) +
             "; seed: " + std::to_string(report.seed) + ".</p>\n";
      out += "<p>Report digest: <code>" + card.report_digest + "</code>; config digest: <code>" +
             html_escape(report.config_digest) + "</code>.</p>\n";
    }
    out += "</section>\n";
  }
  out += "</body>\n</html>\n";
  return out;
}

json structured_json(const CardDocument& card) {
  json sections = json::array();
  for (const auto& s : card.sections) {
    json entries = json::array();
    for (const auto& e : s.entries) entries.push_back({{"label", e.label}, {"text", e.text}, {"provided", e.provided}});
    sections.push_back({{"number", s.number}, {"title", s.title}, {"entries", std::move(entries)}});
  }
  json items = json::array();
  for (const auto& i : card.clarity.items) items.push_back({{"item", i.name}, {"satisfied", i.satisfied}});
  json body;
  body["format"] = kCardFormat;
  body["manifest"] = card.manifest.doc;
  body["report"] = card.report ? report_to_json(*card.report) : json(nullptr);
  body["report_digest"] = card.report_digest;
  body["documentation_clarity"] = {{"score", card.clarity.score}, {"items", std::move(items)}};
  body["sections"] = std::move(sections);
  return {{"smd_card", std::move(body)}};
}

}  // namespace

std::string render(const CardDocument& card, CardFormat format) {
  switch (format) {
    case CardFormat::kStructured: return dump_canonical_json(structured_json(card));
    case CardFormat::kMarkdown: return render_markdown(card);
    case CardFormat::kHtml: return render_html(card);
  }
  return {};
}

CardDocument parse_structured_card(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("card: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("smd_card") || !doc["smd_card"].is_object()) {
    throw Error(ErrorCode::kManifest, "not a structured card");
  }
  const auto& body = doc["smd_card"];
  if (body.value("format", std::string()) != kCardFormat) throw Error(ErrorCode::kManifest, "unsupported card format");
  auto manifest = parse_card_manifest(body.at("manifest"));
  std::optional<QualityReport> report;
  if (body.contains("report") && !body["report"].is_null()) {
    try {
      report = report_from_json(body["report"]);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, std::string("card report: ") + e.what());
    }
    manifest.report_digest = body.value("report_digest", std::string());
  }
  return build_card(manifest, report);
}

}  // namespace smdcard
