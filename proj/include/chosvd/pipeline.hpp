#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chosvd/classify.hpp"
#include "chosvd/cohort.hpp"
#include "chosvd/errors.hpp"
#include "chosvd/features.hpp"
#include "chosvd/hosvd.hpp"
#include "chosvd/io.hpp"
#include "chosvd/signal.hpp"
#include "chosvd/tensor.hpp"

namespace chosvd {

using Json = nlohmann::json;

enum class SelectionMode { in_fold, global };
enum class AucMode { pooled, per_fold };

// Resolved run configuration.  A config file provides defaults; command-line
// flags override individual fields.  The seed is mandatory and never falls
// back to wall-clock time, so every run is reproducible from its audit
// header.
struct RunConfig {
  std::filesystem::path input;  // cohort manifest (.txt) or synth spec (.json)
  std::optional<Window> window; // overrides the manifest window
  std::array<std::optional<std::size_t>, 3> ranks{std::size_t{4},
                                                  std::size_t{32},
                                                  std::nullopt};
  bool ranks_explicit = false;   // user-set ranks fail loudly when infeasible
  std::optional<double> energy_tau;  // energy-based rank selection
  bool rotate = false;
  Horizon horizon = Horizon::day30;
  std::size_t folds = 5;
  std::optional<std::uint64_t> seed;
  ProjectionKind projection = ProjectionKind::bilinear;
  FisherKind fisher = FisherKind::linear;
  SelectionMode selection = SelectionMode::in_fold;
  AucMode auc_mode = AucMode::pooled;
  std::size_t top_k = 3;
  bool skip_bad = false;
  bool standardize = true;
  bool taper = false;
  std::filesystem::path out_dir = "out";

  std::uint64_t require_seed() const {
    if (!seed)
      throw UsageError("a seed is required (--seed or config \"seed\"); "
                       "runs never seed from the clock");
    return *seed;
  }
};

inline std::string to_string(ProjectionKind k) {
  return k == ProjectionKind::bilinear ? "bilinear" : "normalized";
}
inline std::string to_string(FisherKind k) {
  return k == FisherKind::linear ? "linear" : "circular";
}
inline std::string to_string(SelectionMode m) {
  return m == SelectionMode::in_fold ? "in-fold" : "global";
}
inline std::string to_string(AucMode m) {
  return m == AucMode::pooled ? "pooled" : "per-fold";
}

inline ProjectionKind parse_projection(const std::string& s) {
  if (s == "bilinear") return ProjectionKind::bilinear;
  if (s == "normalized") return ProjectionKind::normalized;
  throw UsageError("projection must be 'bilinear' or 'normalized', got '" +
                   s + "'");
}
inline FisherKind parse_fisher(const std::string& s) {
  if (s == "linear") return FisherKind::linear;
  if (s == "circular") return FisherKind::circular;
  throw UsageError("fisher must be 'linear' or 'circular', got '" + s + "'");
}
inline SelectionMode parse_selection(const std::string& s) {
  if (s == "in-fold") return SelectionMode::in_fold;
  if (s == "global") return SelectionMode::global;
  throw UsageError("selection must be 'in-fold' or 'global', got '" + s + "'");
}
inline AucMode parse_auc_mode(const std::string& s) {
  if (s == "pooled") return AucMode::pooled;
  if (s == "per-fold") return AucMode::per_fold;
  throw UsageError("auc must be 'pooled' or 'per-fold', got '" + s + "'");
}

// Ranks string: three comma-separated entries, each a positive integer or
// 'full'.
inline std::array<std::optional<std::size_t>, 3> parse_ranks(
    const std::string& text) {
  if (trim(text) == "full") return {std::nullopt, std::nullopt, std::nullopt};
  const std::vector<std::string> parts = split(text, ',');
  if (parts.size() != 3)
    throw UsageError("ranks must be 'R1,R2,R3' (or 'full'), got '" + text +
                     "'");
  std::array<std::optional<std::size_t>, 3> out;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string p = trim(parts[i]);
    if (p == "full") {
      out[i] = std::nullopt;
    } else {
      long long v = 0;
      try {
        v = parse_int(p, "ranks");
      } catch (const DataError& e) {
        throw UsageError(e.what());
      }
      if (v <= 0) throw UsageError("ranks must be positive or 'full'");
      out[i] = static_cast<std::size_t>(v);
    }
  }
  return out;
}

inline std::string ranks_to_string(
    const std::array<std::optional<std::size_t>, 3>& ranks) {
  std::string s;
  for (std::size_t i = 0; i < 3; ++i) {
    if (i) s += ',';
    s += ranks[i] ? std::to_string(*ranks[i]) : std::string("full");
  }
  return s;
}

// Canonical resolved-config rendering (alphabetical keys via nlohmann's
// ordered map), embedded in every artifact for audit and replay.
inline Json config_to_json(const RunConfig& c) {
  Json j;
  j["auc"] = to_string(c.auc_mode);
  j["energy_tau"] = c.energy_tau ? Json(*c.energy_tau) : Json(nullptr);
  j["fisher"] = to_string(c.fisher);
  j["folds"] = c.folds;
  j["horizon"] = to_string(c.horizon);
  j["input"] = c.input.generic_string();
  j["out"] = c.out_dir.generic_string();
  j["projection"] = to_string(c.projection);
  j["ranks"] = ranks_to_string(c.ranks);
  j["rotate"] = c.rotate;
  j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
  j["selection"] = to_string(c.selection);
  j["skip_bad"] = c.skip_bad;
  j["standardize"] = c.standardize;
  j["taper"] = c.taper;
  j["top_k"] = c.top_k;
  j["window"] = c.window ? Json(to_string(*c.window)) : Json(nullptr);
  return j;
}

namespace detail {

template <typename T>
inline T json_get(const Json& j, const std::string& key, const char* type) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw UsageError("config field '" + key + "' must be " + type);
  }
}

}  // namespace detail

// Applies the fields of a config JSON document onto `config`.  Unknown keys
// are rejected so typos cannot silently fall back to defaults.
inline void apply_config_json(const Json& j, RunConfig& config) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "schema") {
      if (!value.is_string() || value.get<std::string>() != "chosvd-run/1")
        throw UsageError("config schema must be 'chosvd-run/1'");
    } else if (key == "input") {
      config.input = detail::json_get<std::string>(j, key, "a string");
    } else if (key == "window") {
      if (!value.is_null())
        config.window =
            parse_window(detail::json_get<std::string>(j, key, "a string"));
    } else if (key == "ranks") {
      if (!value.is_null()) {
        config.ranks =
            parse_ranks(detail::json_get<std::string>(j, key, "a string"));
        config.ranks_explicit = true;
      }
    } else if (key == "energy_tau") {
      if (!value.is_null())
        config.energy_tau = detail::json_get<double>(j, key, "a number");
    } else if (key == "rotate") {
      config.rotate = detail::json_get<bool>(j, key, "a boolean");
    } else if (key == "horizon") {
      config.horizon =
          parse_horizon(detail::json_get<std::string>(j, key, "a string"));
    } else if (key == "folds") {
      config.folds = detail::json_get<std::size_t>(j, key, "an integer");
    } else if (key == "seed") {
      if (!value.is_null())
        config.seed = detail::json_get<std::uint64_t>(j, key, "an integer");
    } else if (key == "projection") {
      config.projection =
          parse_projection(detail::json_get<std::string>(j, key, "a string"));
    } else if (key == "fisher") {
      config.fisher =
          parse_fisher(detail::json_get<std::string>(j, key, "a string"));
    } else if (key == "selection") {
      config.selection =
          parse_selection(detail::json_get<std::string>(j, key, "a string"));
    } else if (key == "auc") {
      config.auc_mode =
          parse_auc_mode(detail::json_get<std::string>(j, key, "a string"));
    } else if (key == "top_k") {
      config.top_k = detail::json_get<std::size_t>(j, key, "an integer");
      if (config.top_k == 0) throw UsageError("top_k must be positive");
    } else if (key == "skip_bad") {
      config.skip_bad = detail::json_get<bool>(j, key, "a boolean");
    } else if (key == "standardize") {
      config.standardize = detail::json_get<bool>(j, key, "a boolean");
    } else if (key == "taper") {
      config.taper = detail::json_get<bool>(j, key, "a boolean");
    } else if (key == "out") {
      config.out_dir = detail::json_get<std::string>(j, key, "a string");
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
}

inline Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw UsageError("config parse error in " + path.string() + ": " +
                     e.what());
  }
  return j;
}

// Synthetic-cohort spec file (schema chosvd-synth/1).
inline SynthSpec parse_synth_spec(const Json& j) {
  if (!j.is_object()) throw UsageError("synth spec must be a JSON object");
  SynthSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "schema") {
      if (!value.is_string() || value.get<std::string>() != "chosvd-synth/1")
        throw UsageError("synth spec schema must be 'chosvd-synth/1'");
    } else if (key == "dims") {
      const auto dims = detail::json_get<std::vector<std::size_t>>(
          j, key, "an array of 3 integers");
      if (dims.size() != 3)
        throw UsageError("synth spec dims must have 3 entries");
      spec.dims = {dims[0], dims[1], dims[2]};
    } else if (key == "planted_rank") {
      spec.planted_rank = detail::json_get<std::size_t>(j, key, "an integer");
    } else if (key == "designated_component") {
      spec.designated_component =
          detail::json_get<std::size_t>(j, key, "an integer");
    } else if (key == "class_offsets") {
      const auto offs = detail::json_get<std::vector<double>>(
          j, key, "an array of 2 numbers");
      if (offs.size() != 2)
        throw UsageError("synth spec class_offsets must have 2 entries");
      spec.class_offsets = {offs[0], offs[1]};
    } else if (key == "phase_jitter") {
      spec.phase_jitter = detail::json_get<double>(j, key, "a number");
    } else if (key == "subject_phase_spread") {
      spec.subject_phase_spread =
          detail::json_get<double>(j, key, "a number");
    } else if (key == "subject_gain_jitter") {
      spec.subject_gain_jitter = detail::json_get<double>(j, key, "a number");
    } else if (key == "component_decay") {
      spec.component_decay = detail::json_get<double>(j, key, "a number");
    } else if (key == "noise_rel") {
      spec.noise_rel = detail::json_get<double>(j, key, "a number");
    } else if (key == "severe_fraction") {
      spec.severe_fraction = detail::json_get<double>(j, key, "a number");
    } else if (key == "seed") {
      spec.seed = detail::json_get<std::uint64_t>(j, key, "an integer");
    } else {
      throw UsageError("unknown synth spec key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

inline Json synth_spec_to_json(const SynthSpec& spec) {
  Json j;
  j["schema"] = "chosvd-synth/1";
  j["class_offsets"] = {spec.class_offsets[0], spec.class_offsets[1]};
  j["component_decay"] = spec.component_decay;
  j["designated_component"] = spec.designated_component;
  j["dims"] = {spec.dims[0], spec.dims[1], spec.dims[2]};
  j["noise_rel"] = spec.noise_rel;
  j["phase_jitter"] = spec.phase_jitter;
  j["planted_rank"] = spec.planted_rank;
  j["seed"] = spec.seed;
  j["severe_fraction"] = spec.severe_fraction;
  j["subject_gain_jitter"] = spec.subject_gain_jitter;
  j["subject_phase_spread"] = spec.subject_phase_spread;
  return j;
}

namespace detail {

inline Json complex_matrix_to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c)
      row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

// Input resolution shared by decompose and classify: a .json input is a
// synthetic spec generated in memory; anything else is a cohort manifest on
// disk.
struct ResolvedInput {
  ComplexTensor3 tensor;
  std::vector<SubjectRecord> subjects;
  std::vector<std::string> notes;
  bool synthetic = false;
};

inline ResolvedInput resolve_input(const RunConfig& config) {
  if (config.input.empty())
    throw UsageError("no input given (config \"input\" or --input)");
  if (!std::filesystem::exists(config.input))
    throw UsageError("input does not exist: " + config.input.generic_string());
  ResolvedInput out;
  if (config.input.extension() == ".json") {
    const SynthSpec spec = parse_synth_spec(load_json_file(config.input));
    SynthCohort cohort = synth_cohort(spec);
    out.tensor = std::move(cohort.tensor);
    out.subjects = std::move(cohort.subjects);
    out.synthetic = true;
    return out;
  }
  CohortManifest manifest = read_manifest(config.input);
  if (config.window) manifest.window = config.window;
  IngestOptions opts;
  opts.standardize = config.standardize;
  opts.taper = config.taper;
  opts.skip_bad = config.skip_bad;
  IngestResult ingested = ingest(manifest, opts);
  out.tensor = std::move(ingested.tensor);
  out.subjects = std::move(ingested.subjects);
  out.notes = std::move(ingested.notes);
  return out;
}

// Rank resolution: defaults are clamped to what the tensor supports (noted),
// explicit user ranks are validated strictly by hosvd itself, and energy_tau
// selects the smallest ranks holding that fraction of each mode's spectral
// energy.
inline HosvdFactors decompose_tensor(const ComplexTensor3& tensor,
                                     const RunConfig& config,
                                     std::vector<std::string>* notes = nullptr) {
  const auto& d = tensor.dims();
  if (config.energy_tau) {
    HosvdFactors full = hosvd(tensor);
    HosvdRanks ranks;
    ranks.r1 = rank_for_energy(full.mode_singular_values[0], *config.energy_tau);
    ranks.r2 = rank_for_energy(full.mode_singular_values[1], *config.energy_tau);
    ranks.r3 = rank_for_energy(full.mode_singular_values[2], *config.energy_tau);
    if (notes)
      notes->push_back("energy tau " + format_double(*config.energy_tau) +
                       " selected ranks " + std::to_string(*ranks.r1) + "," +
                       std::to_string(*ranks.r2) + "," +
                       std::to_string(*ranks.r3));
    HosvdFactors out;
    out.mode_singular_values = full.mode_singular_values;
    out.u1 = head_cols(full.u1, *ranks.r1);
    out.u2 = head_cols(full.u2, *ranks.r2);
    out.u3 = head_cols(full.u3, *ranks.r3);
    ComplexTensor3 core = mode_product(tensor, adjoint(out.u1), 1);
    core = mode_product(core, adjoint(out.u2), 2);
    core = mode_product(core, adjoint(out.u3), 3);
    out.core = std::move(core);
    return out;
  }
  HosvdRanks ranks;
  std::array<std::optional<std::size_t>*, 3> slots{&ranks.r1, &ranks.r2,
                                                   &ranks.r3};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!config.ranks[i]) continue;
    std::size_t want = *config.ranks[i];
    const std::size_t attainable = std::min(d[i], tensor.size() / d[i]);
    if (want > attainable && !config.ranks_explicit) {
      // Default ranks adapt to small cohorts rather than failing.
      if (notes)
        notes->push_back("default rank " + std::to_string(want) +
                         " for mode " + std::to_string(i + 1) +
                         " clamped to " + std::to_string(attainable));
      want = attainable;
    }
    *slots[i] = want;
  }
  return hosvd(tensor, ranks);
}

struct DecomposeOutcome {
  HosvdFactors factors;
  std::array<std::size_t, 3> dims{};
  double reconstruction_error = 0.0;
  std::filesystem::path factors_path;
  std::filesystem::path spectrum_path;
  std::vector<std::string> notes;
};

// Writes factors.json (all factor matrices, the core, spectra) and a
// spectrum report (text + csv) with the reconstruction error.
inline DecomposeOutcome run_decompose(const RunConfig& config) {
  config.require_seed();
  ResolvedInput input = resolve_input(config);
  DecomposeOutcome out;
  out.notes = input.notes;
  out.dims = input.tensor.dims();
  out.factors = decompose_tensor(input.tensor, config, &out.notes);
  out.reconstruction_error = reconstruction_error(out.factors, input.tensor);

  const Json config_json = config_to_json(config);
  const std::string config_line = config_json.dump();

  Json factors_json;
  factors_json["schema"] = "chosvd-factors/1";
  factors_json["config"] = config_json;
  factors_json["dims"] = {out.dims[0], out.dims[1], out.dims[2]};
  const auto& cd = out.factors.core.dims();
  factors_json["core_dims"] = {cd[0], cd[1], cd[2]};
  factors_json["u1"] = detail::complex_matrix_to_json(out.factors.u1);
  factors_json["u2"] = detail::complex_matrix_to_json(out.factors.u2);
  factors_json["u3"] = detail::complex_matrix_to_json(out.factors.u3);
  Json core = Json::array();  // linear, mode-1 fastest
  for (const Complex& z : out.factors.core.data())
    core.push_back({z.real(), z.imag()});
  factors_json["core"] = std::move(core);
  Json spectra = Json::array();
  for (const auto& s : out.factors.mode_singular_values) spectra.push_back(s);
  factors_json["mode_singular_values"] = std::move(spectra);
  factors_json["reconstruction_error"] = out.reconstruction_error;

  std::filesystem::create_directories(config.out_dir);
  out.factors_path = config.out_dir / "factors.json";
  write_text_file(out.factors_path, factors_json.dump(2) + "\n");

  std::ostringstream text;
  text << "# chosvd spectrum report\n";
  text << "# config: " << config_line << "\n";
  text << "dims " << out.dims[0] << "," << out.dims[1] << "," << out.dims[2]
       << "\n";
  text << "ranks " << out.factors.u1.cols() << "," << out.factors.u2.cols()
       << "," << out.factors.u3.cols() << "\n";
  text << "reconstruction_error " << format_double(out.reconstruction_error)
       << "\n";
  for (std::size_t mode = 0; mode < 3; ++mode) {
    text << "mode" << (mode + 1) << "_singular_values";
    for (double s : out.factors.mode_singular_values[mode])
      text << ' ' << format_double(s);
    text << "\n";
  }
  for (const std::string& n : out.notes) text << "note " << n << "\n";
  out.spectrum_path = config.out_dir / "spectrum.txt";
  write_text_file(out.spectrum_path, text.str());

  std::ostringstream csv;
  csv << "# config: " << config_line << "\n";
  csv << "mode,index,singular_value\n";
  for (std::size_t mode = 0; mode < 3; ++mode)
    for (std::size_t i = 0;
         i < out.factors.mode_singular_values[mode].size(); ++i)
      csv << (mode + 1) << ',' << (i + 1) << ','
          << format_double(out.factors.mode_singular_values[mode][i]) << "\n";
  write_text_file(config.out_dir / "spectrum.csv", csv.str());
  return out;
}

struct ClassifyOutcome {
  std::vector<EvalReport> reports;         // evaluated groups
  std::vector<std::string> skipped;        // degenerate groups with reasons
  std::vector<std::string> notes;
  std::filesystem::path report_text_path;
  std::filesystem::path report_csv_path;
  std::filesystem::path folds_path;
  std::filesystem::path scatter_path;
};

namespace detail {

// Distinct deterministic fold seed per service so equal-size groups do not
// share fold patterns.
inline std::uint64_t group_fold_seed(std::uint64_t seed, Service service) {
  return seed + 0x9E3779B97F4A7C15ULL *
                    (static_cast<std::uint64_t>(service) + 1);
}

inline std::string feature_pair_name(
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
    std::size_t index) {
  return std::to_string(pairs[index].first) + "-" +
         std::to_string(pairs[index].second);
}

}  // namespace detail

// Cross-validated per-service evaluation.  For each service group with both
// classes present: stratified folds, Fisher selection (in-fold by default),
// LDA, pooled confusion counts and AUC over held-out scores.
inline ClassifyOutcome run_classify(const RunConfig& config) {
  const std::uint64_t seed = config.require_seed();
  if (config.folds < 2) throw UsageError("need at least 2 folds");
  ResolvedInput input = resolve_input(config);
  ClassifyOutcome out;
  out.notes = input.notes;

  HosvdFactors factors = decompose_tensor(input.tensor, config, &out.notes);
  const PhaseFeatureMatrix features = build_phase_features(
      input.tensor, factors, config.rotate, config.projection);
  if (!features.degenerate.empty())
    out.notes.push_back(std::to_string(features.degenerate.size()) +
                        " degenerate (near-zero) projections had their "
                        "phase recorded as 0");
  const std::size_t nfeat = features.coeffs.cols();
  const std::size_t top_k = std::min(config.top_k, nfeat);

  const auto groups = group_by_service(input.subjects);
  // Scatter rows accumulate alongside evaluation; axes per group come from
  // a whole-group ranking so every subject shares the same three axes.
  std::ostringstream scatter;
  std::ostringstream folds_csv;
  const Json config_json = config_to_json(config);
  const std::string config_line = config_json.dump();
  scatter << "# config: " << config_line << "\n";
  scatter << "group,subject_id,label,axis1,phase1,axis2,phase2,axis3,phase3\n";
  folds_csv << "# config: " << config_line << "\n";
  folds_csv << "group,subject_id,label,fold\n";

  for (const auto& [service, members] : groups) {
    const std::string group_name = to_string(service);
    // Labeled members at this horizon; the rest are excluded with a note.
    std::vector<std::size_t> rows;
    std::vector<int> labels;
    std::size_t excluded = 0;
    for (std::size_t idx : members) {
      const std::optional<PainLabel> label =
          subject_label(input.subjects[idx], config.horizon);
      if (!label) {
        ++excluded;
        continue;
      }
      rows.push_back(idx);
      labels.push_back(*label == PainLabel::severe ? 1 : 0);
    }
    if (excluded > 0)
      out.notes.push_back(group_name + ": " + std::to_string(excluded) +
                          " subject(s) excluded (no " +
                          to_string(config.horizon) + " score)");
    const std::size_t n_severe =
        static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const std::size_t n_mild = labels.size() - n_severe;
    if (labels.empty() || n_mild < 2 || n_severe < 2) {
      out.skipped.push_back(group_name + ": needs at least 2 subjects per "
                            "class, has " + std::to_string(n_mild) +
                            " mild and " + std::to_string(n_severe) +
                            " severe");
      continue;
    }

    EvalReport report;
    report.group = group_name;
    report.horizon = to_string(config.horizon);
    report.rotated = config.rotate;
    report.seed = seed;
    report.folds = config.folds;
    const std::size_t min_class = std::min(n_mild, n_severe);
    if (min_class < config.folds)
      report.notes.push_back("smallest class (" + std::to_string(min_class) +
                             ") has fewer subjects than folds");

    report.fold_assignments = stratified_kfold(
        labels, config.folds, detail::group_fold_seed(seed, service));

    // Whole-group ranking: used when selection is global, and always for the
    // scatter axes.
    const auto subset_phases = [&](const std::vector<std::size_t>& local) {
      RealMatrix x(local.size(), nfeat);
      for (std::size_t r = 0; r < local.size(); ++r)
        for (std::size_t f = 0; f < nfeat; ++f)
          x(r, f) = features.phases(rows[local[r]], f);
      return x;
    };
    std::vector<std::size_t> all_local(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) all_local[i] = i;
    const RealMatrix all_phases = subset_phases(all_local);
    const std::vector<double> global_scores =
        config.fisher == FisherKind::circular
            ? fisher_scores_circular(all_phases, labels)
            : fisher_scores(all_phases, labels);
    const std::vector<std::size_t> global_selected =
        select_top_k(global_scores, top_k);

    std::vector<int> predicted(rows.size(), 0);
    std::vector<double> scores(rows.size(), 0.0);
    std::vector<double> fold_aucs;
    std::size_t unscored_folds = 0;
    for (std::size_t f = 0; f < config.folds; ++f) {
      std::vector<std::size_t> train_local, test_local;
      for (std::size_t i = 0; i < rows.size(); ++i)
        (report.fold_assignments[i] == static_cast<int>(f) ? test_local
                                                           : train_local)
            .push_back(i);
      if (test_local.empty()) {
        report.selected_features.emplace_back();
        ++unscored_folds;
        continue;
      }
      std::vector<int> train_labels;
      for (std::size_t i : train_local) train_labels.push_back(labels[i]);

      std::vector<std::size_t> selected;
      if (config.selection == SelectionMode::in_fold) {
        const RealMatrix train_phases = subset_phases(train_local);
        const std::vector<double> fold_scores =
            config.fisher == FisherKind::circular
                ? fisher_scores_circular(train_phases, train_labels)
                : fisher_scores(train_phases, train_labels);
        selected = select_top_k(fold_scores, top_k);
      } else {
        selected = global_selected;
      }
      report.selected_features.push_back(selected);

      RealMatrix xtrain(train_local.size(), selected.size());
      for (std::size_t r = 0; r < train_local.size(); ++r)
        for (std::size_t c = 0; c < selected.size(); ++c)
          xtrain(r, c) = features.phases(rows[train_local[r]], selected[c]);
      const LdaModel model = lda_fit(xtrain, train_labels);

      std::vector<double> test_scores;
      std::vector<int> test_labels;
      for (std::size_t i : test_local) {
        std::vector<double> x(selected.size());
        for (std::size_t c = 0; c < selected.size(); ++c)
          x[c] = features.phases(rows[i], selected[c]);
        const double s = lda_score(model, x);
        scores[i] = s;
        predicted[i] = s > 0.0 ? 1 : 0;
        test_scores.push_back(s);
        test_labels.push_back(labels[i]);
      }
      const bool test_has_both =
          std::count(test_labels.begin(), test_labels.end(), 1) > 0 &&
          std::count(test_labels.begin(), test_labels.end(), 0) > 0;
      if (config.auc_mode == AucMode::per_fold) {
        if (test_has_both)
          fold_aucs.push_back(auc(test_scores, test_labels));
        else
          ++unscored_folds;
      }
    }

    report.counts = confusion_counts(predicted, labels);
    confusion_and_metrics(report);
    if (config.auc_mode == AucMode::pooled) {
      report.auc = auc(scores, labels);
    } else if (!fold_aucs.empty()) {
      double sum = 0.0;
      for (double a : fold_aucs) sum += a;
      report.auc = sum / static_cast<double>(fold_aucs.size());
      if (unscored_folds > 0)
        report.notes.push_back(std::to_string(unscored_folds) +
                               " fold(s) lacked both classes and were left "
                               "out of the per-fold AUC");
    } else {
      report.notes.push_back("per-fold AUC undefined: no fold held both "
                             "classes");
    }

    for (std::size_t i = 0; i < rows.size(); ++i) {
      folds_csv << group_name << ',' << input.subjects[rows[i]].id << ','
                << labels[i] << ',' << report.fold_assignments[i] << "\n";
      scatter << group_name << ',' << input.subjects[rows[i]].id << ','
              << labels[i];
      for (std::size_t a = 0; a < 3; ++a) {
        if (a < global_selected.size())
          scatter << ','
                  << detail::feature_pair_name(features.feature_pairs,
                                               global_selected[a])
                  << ','
                  << format_double(
                         features.phases(rows[i], global_selected[a]));
        else
          scatter << ",,";
      }
      scatter << "\n";
    }
    out.reports.push_back(std::move(report));
  }

  // Text report.
  std::ostringstream text;
  text << "# chosvd classification report\n";
  text << "# config: " << config_line << "\n";
  const auto metric_cell = [](const std::optional<double>& v) {
    return v ? format_metric(*v) : std::string("n/a");
  };
  for (const EvalReport& r : out.reports) {
    text << "\ngroup " << r.group << " horizon " << r.horizon << " rotated "
         << (r.rotated ? "true" : "false") << "\n";
    text << "  subjects " << (r.counts.tp + r.counts.fn + r.counts.fp +
                              r.counts.tn)
         << " (mild " << (r.counts.fp + r.counts.tn) << ", severe "
         << (r.counts.tp + r.counts.fn) << ")\n";
    text << "  folds " << r.folds << " seed " << r.seed << "\n";
    text << "  confusion TP " << r.counts.tp << " FN " << r.counts.fn
         << " FP " << r.counts.fp << " TN " << r.counts.tn << "\n";
    text << "  ppv " << metric_cell(r.ppv) << "  tpr " << metric_cell(r.tpr)
         << "  tnr " << metric_cell(r.tnr) << "  auc " << metric_cell(r.auc)
         << "\n";
    for (std::size_t f = 0; f < r.selected_features.size(); ++f) {
      text << "  fold" << f << " features";
      if (r.selected_features[f].empty()) text << " (no test subjects)";
      for (std::size_t idx : r.selected_features[f])
        text << ' '
             << detail::feature_pair_name(features.feature_pairs, idx);
      text << "\n";
    }
    for (const std::string& n : r.notes) text << "  note " << n << "\n";
  }
  if (!out.skipped.empty()) {
    text << "\nskipped groups\n";
    for (const std::string& s : out.skipped) text << "  " << s << "\n";
  }
  if (!out.notes.empty()) {
    text << "\nnotes\n";
    for (const std::string& n : out.notes) text << "  " << n << "\n";
  }

  // Machine-readable table; selected features joined ; within fold, | across
  // folds, so no cell ever contains a comma.
  std::ostringstream csv;
  csv << "# config: " << config_line << "\n";
  csv << "group,horizon,rotated,seed,folds,status,n,n_mild,n_severe,tp,fn,fp,"
         "tn,ppv,tpr,tnr,auc,selected_features\n";
  const auto csv_metric = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const EvalReport& r : out.reports) {
    std::string feats;
    for (std::size_t f = 0; f < r.selected_features.size(); ++f) {
      if (f) feats += '|';
      for (std::size_t i = 0; i < r.selected_features[f].size(); ++i) {
        if (i) feats += ';';
        feats += detail::feature_pair_name(features.feature_pairs,
                                           r.selected_features[f][i]);
      }
    }
    const std::size_t n =
        r.counts.tp + r.counts.fn + r.counts.fp + r.counts.tn;
    csv << r.group << ',' << r.horizon << ','
        << (r.rotated ? "true" : "false") << ',' << r.seed << ',' << r.folds
        << ",ok," << n << ',' << (r.counts.fp + r.counts.tn) << ','
        << (r.counts.tp + r.counts.fn) << ',' << r.counts.tp << ','
        << r.counts.fn << ',' << r.counts.fp << ',' << r.counts.tn << ','
        << csv_metric(r.ppv) << ',' << csv_metric(r.tpr) << ','
        << csv_metric(r.tnr) << ',' << csv_metric(r.auc) << ',' << feats
        << "\n";
  }
  for (const std::string& s : out.skipped) {
    const std::string group_name = s.substr(0, s.find(':'));
    csv << group_name << ',' << to_string(config.horizon) << ','
        << (config.rotate ? "true" : "false") << ',' << seed << ','
        << config.folds << ",skipped,,,,,,,,,,,,\n";
  }

  std::filesystem::create_directories(config.out_dir);
  out.report_text_path = config.out_dir / "report.txt";
  out.report_csv_path = config.out_dir / "report.csv";
  out.folds_path = config.out_dir / "folds.csv";
  out.scatter_path = config.out_dir / "scatter.csv";
  write_text_file(out.report_text_path, text.str());
  write_text_file(out.report_csv_path, csv.str());
  write_text_file(out.folds_path, folds_csv.str());
  write_text_file(out.scatter_path, scatter.str());
  return out;
}

struct SynthOutcome {
  std::filesystem::path manifest_path;
  std::filesystem::path groundtruth_path;
  std::size_t subjects = 0;
};

// Writes a complete synthetic cohort in the ingestion format, plus the
// planted ground truth for validation tooling.
inline SynthOutcome run_synth(const SynthSpec& spec,
                              const std::filesystem::path& out_dir) {
  const SynthCohort cohort = synth_cohort(spec);
  const Json spec_json = synth_spec_to_json(spec);
  const std::vector<std::string> audit = {"chosvd synthetic cohort",
                                          "spec: " + spec_json.dump(),
                                          "seed: " + std::to_string(spec.seed)};
  export_cohort(out_dir, cohort, audit);

  Json truth;
  truth["schema"] = "chosvd-groundtruth/1";
  truth["spec"] = spec_json;
  truth["designated_component"] = cohort.truth.designated_component;
  truth["temporal_bins"] = cohort.truth.temporal_bins;
  truth["labels"] = cohort.labels;
  truth["u1"] = detail::complex_matrix_to_json(cohort.truth.u1);
  truth["u2"] = detail::complex_matrix_to_json(cohort.truth.u2);
  truth["weights"] = detail::complex_matrix_to_json(cohort.truth.weights);
  SynthOutcome out;
  out.manifest_path = out_dir / "manifest.txt";
  out.groundtruth_path = out_dir / "groundtruth.json";
  write_text_file(out.groundtruth_path, truth.dump(2) + "\n");
  out.subjects = cohort.subjects.size();
  return out;
}

}  // namespace chosvd
