#include <catch2/catch_amalgamated.hpp>

#include <chosvd/pipeline.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using chosvd::Json;
using chosvd::RunConfig;
using chosvd::SynthSpec;
namespace fs = std::filesystem;

namespace {

fs::path work_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("chosvd_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_synth_spec(const fs::path& dir, const SynthSpec& spec) {
  const fs::path path = dir / "spec.json";
  chosvd::write_text_file(path, chosvd::synth_spec_to_json(spec).dump(2) + "\n");
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// A small cohort with a strong planted phase split, cheap enough for unit
// tests; mirrors the defaults but 8x smaller in minutes x subjects.
SynthSpec small_planted_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.dims = {6, 40, 24};
  spec.planted_rank = 2;
  spec.designated_component = 1;
  spec.class_offsets = {-chosvd::kPi / 2, chosvd::kPi / 2};
  spec.phase_jitter = 0.05;
  spec.subject_phase_spread = 2.0 * chosvd::kPi;
  spec.noise_rel = 0.1;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("rank strings parse and print symmetrically") {
  auto r = chosvd::parse_ranks("4,32,full");
  CHECK(r[0] == 4);
  CHECK(r[1] == 32);
  CHECK_FALSE(r[2].has_value());
  CHECK(chosvd::ranks_to_string(r) == "4,32,full");

  // Bare "full" is accepted shorthand; the canonical rendering is per-mode,
  // and parsing the rendering gives back the same ranks.
  auto full = chosvd::parse_ranks("full");
  CHECK((!full[0] && !full[1] && !full[2]));
  CHECK(chosvd::ranks_to_string(full) == "full,full,full");
  CHECK(chosvd::parse_ranks(chosvd::ranks_to_string(full)) == full);

  CHECK(chosvd::parse_ranks("3,3,8")[2] == 8);
  CHECK_THROWS_AS(chosvd::parse_ranks("3,3"), chosvd::UsageError);
  CHECK_THROWS_AS(chosvd::parse_ranks("0,3,3"), chosvd::UsageError);
  CHECK_THROWS_AS(chosvd::parse_ranks("a,3,3"), chosvd::UsageError);
}

TEST_CASE("run configs survive a json round trip") {
  RunConfig c;
  c.input = "cohort/manifest.txt";
  c.window = chosvd::parse_window("inc-10,50");
  c.ranks = chosvd::parse_ranks("3,16,full");
  c.ranks_explicit = true;
  c.rotate = true;
  c.horizon = chosvd::Horizon::day90;
  c.folds = 7;
  c.seed = 99;
  c.projection = chosvd::ProjectionKind::normalized;
  c.fisher = chosvd::FisherKind::circular;
  c.selection = chosvd::SelectionMode::global;
  c.auc_mode = chosvd::AucMode::per_fold;
  c.top_k = 5;
  c.out_dir = "results";

  RunConfig back;
  chosvd::apply_config_json(chosvd::config_to_json(c), back);
  CHECK(back.input == c.input);
  REQUIRE(back.window.has_value());
  CHECK(back.window->start == -10);
  CHECK(chosvd::ranks_to_string(back.ranks) == "3,16,full");
  CHECK(back.rotate);
  CHECK(back.horizon == chosvd::Horizon::day90);
  CHECK(back.folds == 7);
  CHECK(back.seed == 99);
  CHECK(back.projection == chosvd::ProjectionKind::normalized);
  CHECK(back.fisher == chosvd::FisherKind::circular);
  CHECK(back.selection == chosvd::SelectionMode::global);
  CHECK(back.auc_mode == chosvd::AucMode::per_fold);
  CHECK(back.top_k == 5);
  CHECK(back.out_dir == fs::path("results"));
}

TEST_CASE("config json is strict about keys, schema, and types") {
  RunConfig c;
  CHECK_THROWS_AS(chosvd::apply_config_json(Json{{"frobnicate", 1}}, c),
                  chosvd::UsageError);
  CHECK_THROWS_AS(chosvd::apply_config_json(Json{{"schema", "other/1"}}, c),
                  chosvd::UsageError);
  CHECK_THROWS_AS(chosvd::apply_config_json(Json{{"folds", "five"}}, c),
                  chosvd::UsageError);
  CHECK_THROWS_AS(chosvd::apply_config_json(Json{{"top_k", 0}}, c),
                  chosvd::UsageError);
  CHECK_NOTHROW(chosvd::apply_config_json(Json{{"schema", "chosvd-run/1"}, {"folds", 3}}, c));
  CHECK(c.folds == 3);
}

TEST_CASE("synth specs parse strictly from json") {
  SynthSpec spec = small_planted_spec(3);
  auto j = chosvd::synth_spec_to_json(spec);
  auto back = chosvd::parse_synth_spec(j);
  CHECK(back.dims == spec.dims);
  CHECK(back.planted_rank == spec.planted_rank);
  CHECK(back.class_offsets[1] == spec.class_offsets[1]);
  CHECK(back.seed == 3);

  j["unexpected"] = true;
  CHECK_THROWS_AS(chosvd::parse_synth_spec(j), chosvd::UsageError);
}

TEST_CASE("a seed is mandatory for decompose and classify") {
  auto dir = work_dir("needseed");
  RunConfig c;
  c.input = write_synth_spec(dir, small_planted_spec(1));
  c.out_dir = dir / "out";
  CHECK_THROWS_AS(chosvd::run_decompose(c), chosvd::UsageError);
  CHECK_THROWS_AS(chosvd::run_classify(c), chosvd::UsageError);
  CHECK_FALSE(fs::exists(c.out_dir));  // nothing was written
}

TEST_CASE("missing input fails before any output appears") {
  auto dir = work_dir("noinput");
  RunConfig c;
  c.input = dir / "absent.txt";
  c.out_dir = dir / "out";
  c.seed = 1;
  CHECK_THROWS_AS(chosvd::run_decompose(c), chosvd::UsageError);
  CHECK_FALSE(fs::exists(c.out_dir));
}

TEST_CASE("decompose writes factors and spectra, full ranks reconstruct") {
  auto dir = work_dir("decompose_full");
  RunConfig c;
  c.input = write_synth_spec(dir, small_planted_spec(5));
  c.out_dir = dir / "out";
  c.seed = 11;
  c.ranks = chosvd::parse_ranks("full");
  c.ranks_explicit = true;

  auto outcome = chosvd::run_decompose(c);
  CHECK(outcome.dims == std::array<std::size_t, 3>{6, 40, 24});
  CHECK(outcome.reconstruction_error < 1e-8);
  REQUIRE(fs::exists(outcome.factors_path));
  REQUIRE(fs::exists(outcome.spectrum_path));
  REQUIRE(fs::exists(c.out_dir / "spectrum.csv"));

  const Json factors = chosvd::load_json_file(outcome.factors_path);
  CHECK(factors.at("schema") == "chosvd-factors/1");
  CHECK(factors.at("dims") == Json({6, 40, 24}));
  CHECK(factors.at("u1").size() == 6);          // rows
  CHECK(factors.at("u1").at(0).size() == 6);    // columns of [re, im] pairs
  CHECK(factors.at("config").at("seed") == 11);
  CHECK(factors.at("reconstruction_error").get<double>() < 1e-8);
}

TEST_CASE("default ranks clamp to small tensors with a note") {
  auto dir = work_dir("decompose_clamp");
  SynthSpec spec = small_planted_spec(6);
  spec.dims = {3, 20, 8};  // below the 4,32 defaults in modes 1 and 2
  RunConfig c;
  c.input = write_synth_spec(dir, spec);
  c.out_dir = dir / "out";
  c.seed = 12;

  auto outcome = chosvd::run_decompose(c);
  CHECK(outcome.factors.u1.cols() == 3);
  CHECK(outcome.factors.u2.cols() == 20);
  bool noted = false;
  for (const auto& n : outcome.notes)
    if (n.find("clamped") != std::string::npos) noted = true;
  CHECK(noted);

  // The same ranks given explicitly must fail instead of adapting.
  c.ranks = chosvd::parse_ranks("4,32,full");
  c.ranks_explicit = true;
  CHECK_THROWS_AS(chosvd::run_decompose(c), chosvd::UsageError);
}

TEST_CASE("energy-based rank selection finds the planted rank when noiseless") {
  auto dir = work_dir("decompose_energy");
  SynthSpec spec = small_planted_spec(7);
  spec.noise_rel = 0.0;
  RunConfig c;
  c.input = write_synth_spec(dir, spec);
  c.out_dir = dir / "out";
  c.seed = 13;
  c.energy_tau = 0.999;

  auto outcome = chosvd::run_decompose(c);
  CHECK(outcome.factors.core.dims() == std::array<std::size_t, 3>{2, 2, 2});
  CHECK(outcome.reconstruction_error < 1e-8);
}

TEST_CASE("classify recovers the planted split and records the setup") {
  auto dir = work_dir("classify_planted");
  RunConfig c;
  c.input = write_synth_spec(dir, small_planted_spec(21));
  c.out_dir = dir / "out";
  c.seed = 1001;
  c.rotate = true;
  c.folds = 4;
  c.ranks = chosvd::parse_ranks("2,2,full");
  c.ranks_explicit = true;

  auto outcome = chosvd::run_classify(c);
  REQUIRE(outcome.reports.size() == 1);
  const auto& report = outcome.reports.front();
  CHECK(report.group == "other");
  CHECK(report.horizon == "day30");
  CHECK(report.rotated);
  CHECK(report.folds == 4);
  REQUIRE(report.auc.has_value());
  CHECK(*report.auc > 0.9);
  CHECK(report.counts.tp + report.counts.fn + report.counts.fp + report.counts.tn == 24);
  REQUIRE(report.selected_features.size() == 4);
  for (const auto& fold_features : report.selected_features)
    CHECK(fold_features.size() == 3);  // top_k default

  for (const fs::path& p :
       {outcome.report_text_path, outcome.report_csv_path, outcome.folds_path,
        outcome.scatter_path}) {
    INFO(p.string());
    REQUIRE(fs::exists(p));
    // Config stamp appears in the leading comment block of every artifact
    // (report.txt carries a title line above it).
    const std::string head = slurp(p).substr(0, 200);
    CHECK(head.find("# config: {") != std::string::npos);
  }

  // folds.csv has one line per subject plus comment and header.
  const std::string folds_text = slurp(outcome.folds_path);
  CHECK(std::count(folds_text.begin(), folds_text.end(), '\n') == 2 + 24);
}

TEST_CASE("identical config and seed reproduce byte-identical reports") {
  auto dir = work_dir("classify_repro");
  const fs::path spec_path = write_synth_spec(dir, small_planted_spec(22));
  // The config stamp records the output directory, so re-run into the same
  // directory and capture the artifacts between runs.
  auto run = [&] {
    RunConfig c;
    c.input = spec_path;
    c.out_dir = dir / "out";
    c.seed = 2002;
    c.rotate = true;
    auto outcome = chosvd::run_classify(c);
    return std::array<std::string, 4>{
        slurp(outcome.report_text_path), slurp(outcome.report_csv_path),
        slurp(outcome.folds_path), slurp(outcome.scatter_path)};
  };
  auto a = run();
  auto b = run();
  for (std::size_t i = 0; i < a.size(); ++i) {
    INFO("artifact " << i);
    CHECK(a[i] == b[i]);
  }
}

TEST_CASE("groups with a lone class member are skipped with a reason") {
  auto dir = work_dir("classify_skip");
  SynthSpec spec = small_planted_spec(23);
  spec.dims = {6, 40, 8};
  spec.severe_fraction = 0.13;  // rounds to one severe subject
  RunConfig c;
  c.input = write_synth_spec(dir, spec);
  c.out_dir = dir / "out";
  c.seed = 3003;

  auto outcome = chosvd::run_classify(c);
  CHECK(outcome.reports.empty());
  REQUIRE_FALSE(outcome.skipped.empty());
  CHECK(outcome.skipped.front().find("other") != std::string::npos);

  const std::string csv = slurp(outcome.report_csv_path);
  CHECK(csv.find("skipped") != std::string::npos);
}

TEST_CASE("synth writes a loadable cohort plus ground truth") {
  auto dir = work_dir("synth_cmd");
  SynthSpec spec = small_planted_spec(24);
  auto outcome = chosvd::run_synth(spec, dir / "cohort");
  CHECK(outcome.subjects == 24);
  REQUIRE(fs::exists(outcome.manifest_path));
  REQUIRE(fs::exists(outcome.groundtruth_path));

  const Json truth = chosvd::load_json_file(outcome.groundtruth_path);
  CHECK(truth.at("schema") == "chosvd-groundtruth/1");
  CHECK(truth.at("labels").size() == 24);
  CHECK(truth.at("u1").size() == 6);  // one row per channel

  // The exported cohort feeds straight back into the pipeline.
  RunConfig c;
  c.input = outcome.manifest_path;
  c.out_dir = dir / "out";
  c.seed = 4004;
  c.rotate = true;
  auto classify = chosvd::run_classify(c);
  REQUIRE(classify.reports.size() == 1);
  CHECK(classify.reports.front().auc.has_value());
}

TEST_CASE("per-fold auc averaging is reported with its mode") {
  auto dir = work_dir("classify_perfold");
  RunConfig c;
  c.input = write_synth_spec(dir, small_planted_spec(25));
  c.out_dir = dir / "out";
  c.seed = 5005;
  c.rotate = true;
  c.auc_mode = chosvd::AucMode::per_fold;

  auto outcome = chosvd::run_classify(c);
  REQUIRE(outcome.reports.size() == 1);
  CHECK(outcome.reports.front().auc.has_value());
}
