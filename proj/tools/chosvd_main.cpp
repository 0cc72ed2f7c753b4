// Batch driver for the chosvd library.
//
//   chosvd synth     --config spec.json --out DIR [--seed N]
//   chosvd decompose --config run.json | --input PATH [flags] --out DIR
//   chosvd classify  --config run.json | --input PATH [flags] --out DIR
//   chosvd report    --input report.csv
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "chosvd/chosvd.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string input;
  std::string out_dir;
  std::string window;
  std::string ranks;
  std::optional<double> energy_tau;
  std::optional<std::uint64_t> seed;
  std::string horizon;
  std::optional<std::size_t> folds;
  std::string projection;
  std::string fisher;
  std::string selection;
  std::string auc_mode;
  std::optional<std::size_t> top_k;
  bool rotate = false;
  bool no_rotate = false;
  bool skip_bad = false;
  bool no_standardize = false;
  bool taper = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f, bool classify_flags) {
  cmd->add_option("--config", f.config_path,
                  "JSON run config; flags override its fields");
  cmd->add_option("--input", f.input,
                  "cohort manifest (.txt) or synthetic spec (.json)");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--window", f.window,
                  "analysis window 'START,LEN' or 'inc±OFF,LEN'");
  cmd->add_option("--ranks", f.ranks, "mode ranks 'R1,R2,R3' ('full' allowed)");
  cmd->add_option("--energy", f.energy_tau,
                  "pick ranks holding this energy fraction per mode");
  cmd->add_option("--seed", f.seed, "random seed (required, never implicit)");
  cmd->add_flag("--skip-bad", f.skip_bad,
                "drop unreadable subjects instead of aborting");
  cmd->add_flag("--no-standardize", f.no_standardize,
                "skip per-channel standardization at ingestion");
  cmd->add_flag("--taper", f.taper,
                "cosine-taper series edges before the analytic transform");
  if (classify_flags) {
    cmd->add_flag("--rotate", f.rotate,
                  "rotate projections by the conjugate subject-factor entry");
    cmd->add_flag("--no-rotate", f.no_rotate, "force rotation off");
    cmd->add_option("--horizon", f.horizon, "outcome horizon: day30 | day90");
    cmd->add_option("--folds", f.folds, "cross-validation folds");
    cmd->add_option("--projection", f.projection,
                    "projection kind: bilinear | normalized");
    cmd->add_option("--fisher", f.fisher,
                    "Fisher score kind: linear | circular");
    cmd->add_option("--selection", f.selection,
                    "feature selection: in-fold | global");
    cmd->add_option("--auc", f.auc_mode, "AUC pooling: pooled | per-fold");
    cmd->add_option("--top-k", f.top_k, "features kept per fold");
  }
}

chosvd::RunConfig build_config(const CommonFlags& f) {
  chosvd::RunConfig config;
  if (!f.config_path.empty())
    chosvd::apply_config_json(chosvd::load_json_file(f.config_path), config);
  if (!f.input.empty()) config.input = f.input;
  if (!f.out_dir.empty()) config.out_dir = f.out_dir;
  if (!f.window.empty()) config.window = chosvd::parse_window(f.window);
  if (!f.ranks.empty()) {
    config.ranks = chosvd::parse_ranks(f.ranks);
    config.ranks_explicit = true;
  }
  if (f.energy_tau) config.energy_tau = f.energy_tau;
  if (f.seed) config.seed = f.seed;
  if (!f.horizon.empty()) config.horizon = chosvd::parse_horizon(f.horizon);
  if (f.folds) config.folds = *f.folds;
  if (!f.projection.empty())
    config.projection = chosvd::parse_projection(f.projection);
  if (!f.fisher.empty()) config.fisher = chosvd::parse_fisher(f.fisher);
  if (!f.selection.empty())
    config.selection = chosvd::parse_selection(f.selection);
  if (!f.auc_mode.empty()) config.auc_mode = chosvd::parse_auc_mode(f.auc_mode);
  if (f.top_k) config.top_k = *f.top_k;
  if (f.rotate && f.no_rotate)
    throw chosvd::UsageError("--rotate and --no-rotate conflict");
  if (f.rotate) config.rotate = true;
  if (f.no_rotate) config.rotate = false;
  if (f.skip_bad) config.skip_bad = true;
  if (f.no_standardize) config.standardize = false;
  if (f.taper) config.taper = true;
  return config;
}

int cmd_synth(const CommonFlags& f) {
  if (f.config_path.empty() && f.input.empty())
    throw chosvd::UsageError("synth needs a spec file (--config or --input)");
  const std::string spec_path =
      f.config_path.empty() ? f.input : f.config_path;
  chosvd::SynthSpec spec =
      chosvd::parse_synth_spec(chosvd::load_json_file(spec_path));
  if (f.seed) {
    spec.seed = *f.seed;
    spec.validate();
  }
  const std::string out_dir = f.out_dir.empty() ? "synth_out" : f.out_dir;
  const chosvd::SynthOutcome outcome = chosvd::run_synth(spec, out_dir);
  std::cout << "wrote " << outcome.subjects << " subjects under " << out_dir
            << " (manifest: " << outcome.manifest_path.generic_string()
            << ")\n";
  return chosvd::kExitSuccess;
}

int cmd_decompose(const CommonFlags& f) {
  const chosvd::RunConfig config = build_config(f);
  const chosvd::DecomposeOutcome outcome = chosvd::run_decompose(config);
  std::cout << "dims " << outcome.dims[0] << "x" << outcome.dims[1] << "x"
            << outcome.dims[2] << ", ranks " << outcome.factors.u1.cols()
            << "," << outcome.factors.u2.cols() << ","
            << outcome.factors.u3.cols() << ", reconstruction error "
            << chosvd::format_double(outcome.reconstruction_error) << "\n";
  std::cout << "factors: " << outcome.factors_path.generic_string() << "\n";
  std::cout << "spectrum: " << outcome.spectrum_path.generic_string() << "\n";
  return chosvd::kExitSuccess;
}

int cmd_classify(const CommonFlags& f) {
  const chosvd::RunConfig config = build_config(f);
  const chosvd::ClassifyOutcome outcome = chosvd::run_classify(config);
  for (const chosvd::EvalReport& r : outcome.reports) {
    std::cout << r.group << " " << r.horizon
              << (r.rotated ? " rotated" : " unrotated") << ": TP "
              << r.counts.tp << " FN " << r.counts.fn << " FP " << r.counts.fp
              << " TN " << r.counts.tn;
    if (r.auc) std::cout << " auc " << chosvd::format_metric(*r.auc);
    std::cout << "\n";
  }
  for (const std::string& s : outcome.skipped)
    std::cout << "skipped " << s << "\n";
  std::cout << "report: " << outcome.report_text_path.generic_string() << "\n";
  return chosvd::kExitSuccess;
}

// Renders a machine-readable report table as aligned text on stdout.
int cmd_report(const CommonFlags& f) {
  if (f.input.empty())
    throw chosvd::UsageError("report needs --input report.csv");
  const std::vector<std::string> lines = chosvd::read_lines(f.input);
  std::vector<std::vector<std::string>> table;
  for (const std::string& line : lines) {
    const std::string t = chosvd::trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::cout << t << "\n";
      continue;
    }
    table.push_back(chosvd::split(t, ','));
  }
  if (table.empty()) throw chosvd::DataError("report table is empty");
  std::vector<std::size_t> widths;
  for (const auto& row : table) {
    if (row.size() > widths.size()) widths.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c)
      widths[c] = std::max(widths[c], row[c].size());
  }
  for (const auto& row : table) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::string cell = row[c];
      cell.resize(widths[c], ' ');
      line += cell;
      if (c + 1 < row.size()) line += "  ";
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    std::cout << line << "\n";
  }
  return chosvd::kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"complex HOSVD phase-feature analysis of time-series cohorts"};
  app.require_subcommand(1);

  CommonFlags synth_flags, decompose_flags, classify_flags, report_flags;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic cohort");
  add_common_flags(synth, synth_flags, false);
  CLI::App* decompose =
      app.add_subcommand("decompose", "ingest a cohort and write HOSVD factors");
  add_common_flags(decompose, decompose_flags, false);
  CLI::App* classify = app.add_subcommand(
      "classify", "cross-validated phase-feature classification per service");
  add_common_flags(classify, classify_flags, true);
  CLI::App* report =
      app.add_subcommand("report", "render a report.csv as aligned text");
  report->add_option("--input", report_flags.input, "report.csv path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // help exits 0, parse errors nonzero
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_flags);
    if (decompose->parsed()) return cmd_decompose(decompose_flags);
    if (classify->parsed()) return cmd_classify(classify_flags);
    if (report->parsed()) return cmd_report(report_flags);
    throw chosvd::UsageError("no subcommand given");
  } catch (const chosvd::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return chosvd::kExitUsage;
  } catch (const chosvd::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return chosvd::kExitData;
  } catch (const chosvd::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return chosvd::kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
