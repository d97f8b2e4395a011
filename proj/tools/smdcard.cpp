// smdcard: evaluate synthetic data quality and render data cards.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "smdcard/aggregate.hpp"
#include "smdcard/card.hpp"
#include "smdcard/error.hpp"
#include "smdcard/evaluate.hpp"
#include "smdcard/harness.hpp"
#include "smdcard/ingest.hpp"

namespace fs = std::filesystem;
using namespace smdcard;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUser = 2;

int exit_code_for(ErrorCode code) { return static_cast<int>(code) < 500 ? kExitUser : kExitInternal; }

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

void print_summary(const QualityReport& report) {
  const auto& global = report.global();
  for (const auto& c : global.criteria) {
    std::string score = "-";
    if (c.score) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1f", *c.score);
      score = buf;
    }
    std::cout << to_string(c.criterion) << ": " << to_string(c.verdict) << " (" << score << ")\n";
  }
}

struct EvaluateArgs {
  std::string real, synthetic, table, images, config, out;
  bool validate_only = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const auto config = read_eval_config(a.config);
  const auto inputs = load_inputs({opt_path(a.real), opt_path(a.synthetic), opt_path(a.table), opt_path(a.images)},
                                  config);
  const auto outcome = validate_inputs(inputs, config);
  if (!outcome.ok()) {
    for (const auto& v : outcome.violations) std::cerr << format_error_line(v.code, v.message) << "\n";
    return kExitUser;
  }
  if (a.validate_only) {
    std::cout << "plan ok: " << config.metrics.size() << " metrics\n";
    return kExitOk;
  }
  if (a.out.empty()) throw Error(ErrorCode::kConfig, "--out is required unless --validate-config is given");
  const auto report = evaluate(inputs, config);
  write_report(report, a.out);
  print_summary(report);
  return kExitOk;
}

int cmd_card(const std::string& manifest_path, const std::string& report_path, const std::string& format_name,
             const std::string& out) {
  const auto format = parse_card_format(format_name);
  if (!format) throw Error(ErrorCode::kConfig, "unknown card format \"" + format_name + "\" (structured, md, html)");
  const auto manifest = read_card_manifest(manifest_path);
  std::optional<QualityReport> report;
  if (!report_path.empty()) report = read_report(report_path);
  const auto card = build_card(manifest, report);
  write_file_atomic(out, render(card, *format));
  return kExitOk;
}

int cmd_calibrate(const std::string& real, const std::string& config_path, const std::string& out) {
  const auto config = read_eval_config(config_path);
  const auto inputs = load_inputs({fs::path(real), std::nullopt, std::nullopt, std::nullopt}, config);
  write_file_atomic(out, dump_canonical_json(calibrate(inputs, config)));
  return kExitOk;
}

int cmd_fixtures(const std::string& recipe, const std::string& out) {
  for (const auto& name : run_fixture_recipe(parse_json_file(recipe), out)) std::cout << name << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic data quality evaluation and data cards"};
  app.require_subcommand(1);

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compute metrics and write a quality report");
  evaluate_cmd->add_option("--real", ev.real, "Reference embeddings");
  evaluate_cmd->add_option("--synthetic", ev.synthetic, "Synthetic embeddings");
  evaluate_cmd->add_option("--table", ev.table, "Synthetic record table");
  evaluate_cmd->add_option("--images", ev.images, "Image pair manifest");
  evaluate_cmd->add_option("--config", ev.config, "Evaluation config")->required();
  evaluate_cmd->add_option("--out", ev.out, "Report path");
  evaluate_cmd->add_flag("--validate-config", ev.validate_only, "Check the plan and inputs without computing");

  std::string manifest, report, format = "md", card_out;
  auto* card_cmd = app.add_subcommand("card", "Render a data card");
  card_cmd->add_option("--manifest", manifest, "Descriptive manifest")->required();
  card_cmd->add_option("--report", report, "Quality report");
  card_cmd->add_option("--format", format, "structured, md or html");
  card_cmd->add_option("--out", card_out, "Output path")->required();

  std::string cal_real, cal_config, cal_out;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Suggest normalization bounds from a reference set");
  calibrate_cmd->add_option("--real", cal_real, "Reference embeddings")->required();
  calibrate_cmd->add_option("--config", cal_config, "Evaluation config")->required();
  calibrate_cmd->add_option("--out", cal_out, "Bounds file")->required();

  std::string recipe, fixtures_out;
  auto* fixtures_cmd = app.add_subcommand("fixtures", "Write fixtures with injected defects");
  fixtures_cmd->add_option("--recipe", recipe, "Recipe JSON")->required();
  fixtures_cmd->add_option("--out", fixtures_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << format_error_line(ErrorCode::kConfig, e.what()) << "\n";
    return kExitUser;
  }

  try {
    if (*evaluate_cmd) return cmd_evaluate(ev);
    if (*card_cmd) return cmd_card(manifest, report, format, card_out);
    if (*calibrate_cmd) return cmd_calibrate(cal_real, cal_config, cal_out);
    if (*fixtures_cmd) return cmd_fixtures(recipe, fixtures_out);
  } catch (const Error& e) {
    std::cerr << format_error_line(e.code(), e.what()) << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << format_error_line(ErrorCode::kInternal, e.what()) << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
