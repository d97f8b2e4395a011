#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "smdcard/core.hpp"

namespace smdcard {

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

struct CardSectionSpec {
  int number;
  std::string_view key;  // manifest key; empty for the quality section
  std::string_view title;
  std::vector<std::string_view> labels;
};

// The eight sections in card order.
std::span<const CardSectionSpec> card_sections();

// Every field label in card order (section 1 and 8 both have "Dataset Size").
std::vector<std::string> card_field_labels();

inline constexpr const char* kNotProvided = "not provided";
inline constexpr const char* kCardFormat = "smd-card/1";

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct TaskMetric {
  std::string name;
  std::string value;
  std::string threshold;
};

struct GenerationMethod {
  std::string description;
  std::vector<std::pair<std::string, std::string>> parameters;
};

// Descriptive input keyed by section ("general", "task_based",
// "human_based", "ethical", "usage", "generation", "reference") and then by
// field label. Only section 1 "Name" is required.
struct CardManifest {
  nlohmann::json doc = nlohmann::json::object();
  std::optional<std::string> report_digest;  // pin checked against the report

  // Field text, or nullopt when absent or blank.
  std::optional<std::string> text(std::string_view section, std::string_view label) const;
  GenerationMethod generation_method() const;
  std::vector<TaskMetric> task_metrics() const;
};

// Strict: unknown sections or labels throw kManifest.
CardManifest parse_card_manifest(const nlohmann::json& doc);

// Accepts a plain manifest or a structured card, whose embedded manifest
// and report digest are used.
CardManifest read_card_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Documentation clarity rubric
// ---------------------------------------------------------------------------

struct ClarityItem {
  std::string name;
  bool satisfied = false;
};

struct ClarityResult {
  int score = 1;
  std::vector<ClarityItem> items;
};

inline constexpr std::size_t kReferenceFieldsForPopulated = 5;

// Nine checklist items; score = 1 + satisfied count, capped at 10.
ClarityResult documentation_clarity(const CardManifest& manifest);

// ---------------------------------------------------------------------------
// Card document and rendering
// ---------------------------------------------------------------------------

struct CardEntry {
  std::string label;
  std::string text;
  bool provided = false;
};

struct CardSection {
  int number = 0;
  std::string title;
  std::vector<CardEntry> entries;
};

struct CardDocument {
  CardManifest manifest;
  std::optional<QualityReport> report;
  std::string report_digest;
  ClarityResult clarity;
  std::vector<CardSection> sections;
};

// Throws kReportChanged when the manifest pins a different report digest.
CardDocument build_card(const CardManifest& manifest, const std::optional<QualityReport>& report);

enum class CardFormat { kStructured, kMarkdown, kHtml };
std::optional<CardFormat> parse_card_format(std::string_view s);

std::string render(const CardDocument& card, CardFormat format);

// Rebuilds a card from its structured rendering.
CardDocument parse_structured_card(const std::string& text);

}  // namespace smdcard
