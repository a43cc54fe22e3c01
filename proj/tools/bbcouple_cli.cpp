#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bbcouple/harness/config.hpp"
#include "bbcouple/harness/report.hpp"
#include "bbcouple/harness/studies.hpp"

namespace {

using namespace bbcouple;

struct Options {
  std::string config;
  std::string out = "results";
  std::string format = "table";
  std::optional<std::uint64_t> seed;
};

void print_summary(const harness::ExperimentReport& r) {
  std::printf("%-22s %-9s %-10s %10s %8s %14s %14s\n", "label", "status", "subdomains", "dim_lambda", "iters",
              "h1_error", "kappa");
  for (const auto& run : r.runs) {
    auto num = [&](const char* k) {
      auto v = run.number(k);
      return v ? harness::format_double(*v).substr(0, 14) : std::string("-");
    };
    std::printf("%-22s %-9s %-10s %10s %8s %14s %14s\n", run.text("label").c_str(), run.text("status").c_str(),
                run.text("subdomains").c_str(), num("dim_lambda").c_str(), num("iterations").c_str(),
                num("h1_error").c_str(), num("kappa").c_str());
    if (!run.message.empty()) std::printf("    %s\n", run.message.c_str());
  }
  if (!r.derived.empty()) std::printf("derived: %s\n", r.derived.dump().c_str());
}

int run(const std::string& study_name, const Options& o) {
  harness::StudyConfig study;
  try {
    study = harness::load_study(o.config, o.seed);
    if (study.study != study_name) {
      throw Error(ErrorCode::config_invalid,
                  "study: config declares '" + study.study + "' but subcommand is '" + study_name + "'");
    }
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    const harness::ExperimentReport report = harness::run_study(study);
    const auto format = o.format == "structured" ? harness::ReportFormat::structured : harness::ReportFormat::table;
    const auto path = harness::emit_report(report, format, o.out);
    print_summary(report);
    std::printf("wrote %s\n", path.string().c_str());
    return report.passed() ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::config_invalid ? 2 : 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrange multiplier coupling experiments"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  std::string chosen;
  for (const char* name : {"converge", "sweep", "precond", "fracture", "oracle"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config, "study config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--format", opt.format, "table or structured")->check(CLI::IsMember({"table", "structured"}));
    sub->add_option("--seed", seed, "override the seed of every level");
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (auto* sub : app.get_subcommands())
    if (sub->count("--seed") > 0) opt.seed = seed;
  return run(chosen, opt);
}
