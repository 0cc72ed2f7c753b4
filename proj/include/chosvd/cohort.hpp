#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chosvd/errors.hpp"
#include "chosvd/io.hpp"
#include "chosvd/linalg.hpp"
#include "chosvd/rng.hpp"
#include "chosvd/signal.hpp"
#include "chosvd/tensor.hpp"

namespace chosvd {

enum class Service {
  thoracic,
  orthopaedics,
  urology,
  colorectal,
  transplant,
  pancreas_biliary,
  other
};

inline constexpr std::array<Service, 7> kAllServices = {
    Service::thoracic,    Service::orthopaedics,    Service::urology,
    Service::colorectal,  Service::transplant,      Service::pancreas_biliary,
    Service::other};

inline std::string to_string(Service s) {
  switch (s) {
    case Service::thoracic: return "thoracic";
    case Service::orthopaedics: return "orthopaedics";
    case Service::urology: return "urology";
    case Service::colorectal: return "colorectal";
    case Service::transplant: return "transplant";
    case Service::pancreas_biliary: return "pancreas_biliary";
    default: return "other";
  }
}

// Unrecognized names land in the catch-all bucket; the caller may record a
// note when `recognized` comes back false.
inline Service parse_service(const std::string& name, bool* recognized = nullptr) {
  for (Service s : kAllServices)
    if (name == to_string(s)) {
      if (recognized) *recognized = true;
      return s;
    }
  if (recognized) *recognized = false;
  return Service::other;
}

enum class Horizon { day30, day90 };

inline std::string to_string(Horizon h) {
  return h == Horizon::day30 ? "day30" : "day90";
}

inline Horizon parse_horizon(const std::string& name) {
  if (name == "day30") return Horizon::day30;
  if (name == "day90") return Horizon::day90;
  throw UsageError("unknown horizon '" + name + "' (expected day30 or day90)");
}

enum class PainLabel { mild, severe };

// Pain threshold: scores of 3 or less are mild, anything above is severe.
// The horizon only selects which recorded score feeds the rule.
inline PainLabel label_pain(double score, Horizon /*horizon*/) {
  if (!(score >= 0.0 && score <= 10.0))
    throw UsageError("pain score must lie in [0, 10], got " +
                     format_double(score));
  return score <= 3.0 ? PainLabel::mild : PainLabel::severe;
}

struct SubjectRecord {
  std::string id;
  Service service = Service::other;
  std::optional<double> pain_day30;
  std::optional<double> pain_day90;
  std::string series_path;
  std::optional<std::size_t> incision_minute;
};

// Subjects without a recorded score at the horizon are excluded (nullopt),
// never imputed.
inline std::optional<PainLabel> subject_label(const SubjectRecord& subject,
                                              Horizon horizon) {
  const std::optional<double>& score =
      horizon == Horizon::day30 ? subject.pain_day30 : subject.pain_day90;
  if (!score) return std::nullopt;
  return label_pain(*score, horizon);
}

// Analysis window in minutes.  Absolute windows start at a fixed sample;
// incision-relative windows start at (incision_minute + start), where start
// is usually negative (e.g. 10 minutes before incision).
struct Window {
  bool incision_relative = false;
  long long start = 0;
  std::size_t length = 0;
};

inline Window parse_window(const std::string& text) {
  const std::vector<std::string> parts = split(text, ',');
  if (parts.size() != 2)
    throw UsageError("window must be 'START,LENGTH' or 'inc±OFFSET,LENGTH', got '" +
                     text + "'");
  // Window text is configuration (CLI flag or manifest header), so syntax
  // problems are usage errors, not data errors.
  const auto parse_field = [](const std::string& s, const char* what) {
    try {
      return parse_int(s, what);
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
  };
  Window w;
  const std::string start = trim(parts[0]);
  if (start.rfind("inc", 0) == 0) {
    w.incision_relative = true;
    std::string offset = start.substr(3);
    // from_chars takes a bare minus but not an explicit plus.
    if (!offset.empty() && offset.front() == '+') offset.erase(0, 1);
    w.start = offset.empty() ? 0 : parse_field(offset, "window offset");
  } else {
    w.start = parse_field(start, "window start");
    if (w.start < 0)
      throw UsageError("absolute window start must be nonnegative");
  }
  const long long len = parse_field(trim(parts[1]), "window length");
  if (len <= 0) throw UsageError("window length must be positive");
  w.length = static_cast<std::size_t>(len);
  return w;
}

inline std::string to_string(const Window& w) {
  std::string s;
  if (w.incision_relative) {
    s = "inc";
    if (w.start >= 0) s += "+";
    s += std::to_string(w.start);
  } else {
    s = std::to_string(w.start);
  }
  return s + "," + std::to_string(w.length);
}

// Default roster: eight intra-operative vital channels (two heart-rate
// sources: the monitor and the pulse oximeter).
inline std::vector<std::string> default_channels() {
  return {"heart_rate",   "pulse_rate", "spo2",         "systolic_bp",
          "diastolic_bp", "etco2",      "tidal_volume", "et_agent"};
}

struct CohortManifest {
  std::vector<SubjectRecord> subjects;
  std::vector<std::string> channel_names = default_channels();
  double rate_per_min = 1.0;
  std::optional<Window> window;
  std::filesystem::path base_dir;  // series paths resolve against this
  std::vector<std::string> notes;  // non-fatal parse observations
};

inline constexpr const char* kManifestSchema = "chosvd-manifest/1";

// Manifest text format: `key value` lines, then a `subjects` column header
// and one whitespace-separated row per subject with `-` for absent fields.
inline CohortManifest read_manifest(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  CohortManifest m;
  m.base_dir = path.has_parent_path() ? path.parent_path()
                                      : std::filesystem::path(".");
  bool saw_schema = false;
  bool in_subjects = false;
  static const std::vector<std::string> kColumns = {
      "id", "service", "pain_day30", "pain_day90", "incision_minute",
      "series_path"};
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string line = trim(lines[ln]);
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(ln + 1);
    if (!in_subjects) {
      std::istringstream iss(line);
      std::string key;
      iss >> key;
      std::string rest = trim(line.substr(key.size()));
      if (key == "schema") {
        if (rest != kManifestSchema)
          throw DataError("unsupported manifest schema '" + rest + "' at " +
                          where);
        saw_schema = true;
      } else if (key == "rate_per_min") {
        m.rate_per_min = parse_double(rest, where);
        if (m.rate_per_min <= 0.0)
          throw DataError("rate_per_min must be positive at " + where);
      } else if (key == "window") {
        m.window = parse_window(rest);
      } else if (key == "channels") {
        m.channel_names.clear();
        for (const std::string& c : split(rest, ','))
          m.channel_names.push_back(trim(c));
      } else if (key == "subjects") {
        std::vector<std::string> cols;
        std::string col;
        while (iss >> col) cols.push_back(col);
        if (cols != kColumns)
          throw DataError("subject table columns must be 'id service "
                          "pain_day30 pain_day90 incision_minute "
                          "series_path' at " + where);
        in_subjects = true;
      } else {
        throw DataError("unknown manifest key '" + key + "' at " + where);
      }
      continue;
    }
    std::istringstream iss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (iss >> cell) cells.push_back(cell);
    if (cells.size() != kColumns.size())
      throw DataError("subject row has " + std::to_string(cells.size()) +
                      " fields, expected " + std::to_string(kColumns.size()) +
                      " at " + where);
    SubjectRecord rec;
    rec.id = cells[0];
    bool recognized = true;
    rec.service = parse_service(cells[1], &recognized);
    if (!recognized)
      m.notes.push_back("subject " + rec.id + ": unknown service '" +
                        cells[1] + "' mapped to 'other'");
    const auto parse_score = [&](const std::string& cell_text)
        -> std::optional<double> {
      if (cell_text == "-") return std::nullopt;
      const double v = parse_double(cell_text, where);
      if (!(v >= 0.0 && v <= 10.0))
        throw DataError("pain score out of [0, 10] at " + where);
      return v;
    };
    rec.pain_day30 = parse_score(cells[2]);
    rec.pain_day90 = parse_score(cells[3]);
    if (cells[4] != "-") {
      const long long v = parse_int(cells[4], where);
      if (v < 0) throw DataError("incision_minute must be nonnegative at " + where);
      rec.incision_minute = static_cast<std::size_t>(v);
    }
    rec.series_path = cells[5];
    m.subjects.push_back(std::move(rec));
  }
  if (!saw_schema)
    throw DataError("manifest missing schema line: " + path.string());
  if (m.channel_names.empty())
    throw DataError("manifest declares no channels: " + path.string());
  for (std::size_t i = 0; i < m.channel_names.size(); ++i)
    for (std::size_t j = i + 1; j < m.channel_names.size(); ++j)
      if (m.channel_names[i] == m.channel_names[j])
        throw DataError("duplicate channel '" + m.channel_names[i] +
                        "' in manifest");
  return m;
}

inline void write_manifest(const std::filesystem::path& path,
                           const CohortManifest& m,
                           const std::vector<std::string>& comments = {}) {
  std::ostringstream out;
  for (const std::string& comment : comments) out << "# " << comment << '\n';
  out << "schema " << kManifestSchema << '\n';
  out << "rate_per_min " << format_double(m.rate_per_min) << '\n';
  if (m.window) out << "window " << to_string(*m.window) << '\n';
  out << "channels ";
  for (std::size_t i = 0; i < m.channel_names.size(); ++i) {
    if (i) out << ',';
    out << m.channel_names[i];
  }
  out << '\n';
  out << "subjects id service pain_day30 pain_day90 incision_minute "
         "series_path\n";
  for (const SubjectRecord& s : m.subjects) {
    out << s.id << ' ' << to_string(s.service) << ' '
        << (s.pain_day30 ? format_double(*s.pain_day30) : "-") << ' '
        << (s.pain_day90 ? format_double(*s.pain_day90) : "-") << ' '
        << (s.incision_minute ? std::to_string(*s.incision_minute) : "-")
        << ' ' << s.series_path << '\n';
  }
  write_text_file(path, out.str());
}

// Order-preserving partition by service; empty buckets are omitted.
inline std::vector<std::pair<Service, std::vector<std::size_t>>>
group_by_service(const std::vector<SubjectRecord>& subjects) {
  std::vector<std::pair<Service, std::vector<std::size_t>>> groups;
  for (Service s : kAllServices) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < subjects.size(); ++i)
      if (subjects[i].service == s) members.push_back(i);
    if (!members.empty()) groups.emplace_back(s, std::move(members));
  }
  return groups;
}

struct IngestOptions {
  bool standardize = true;
  bool taper = false;
  std::size_t taper_ramp = 5;
  bool skip_bad = false;          // drop failing subjects instead of aborting
  double max_missing_fraction = 0.10;
};

struct IngestResult {
  ComplexTensor3 tensor;  // channels x window length x subjects kept
  std::vector<SubjectRecord> subjects;  // kept, in manifest order
  std::vector<std::string> notes;       // skips and warnings, itemized
};

// Reads every subject's series, applies the window, fills gaps, standardizes,
// complexifies, and stacks slices in manifest order.  Any per-subject problem
// is collected with the subject and channel named; without skip_bad one or
// more problems abort the whole ingestion.
inline IngestResult ingest(const CohortManifest& manifest,
                           const IngestOptions& options = {}) {
  if (manifest.subjects.empty())
    throw UsageError("ingest: manifest lists no subjects");
  if (manifest.channel_names.empty())
    throw UsageError("ingest: no channels configured");

  const std::size_t nchan = manifest.channel_names.size();
  std::vector<std::string> problems;
  std::vector<std::vector<std::vector<Complex>>> kept_slices;
  std::vector<SubjectRecord> kept_subjects;
  std::optional<std::size_t> window_len;
  if (manifest.window) window_len = manifest.window->length;

  for (const SubjectRecord& subject : manifest.subjects) {
    std::vector<std::vector<Complex>> slice(nchan);
    try {
      const SeriesTable table =
          read_series_csv(manifest.base_dir / subject.series_path);
      // Resolve the window for this subject.
      std::size_t wstart = 0;
      std::size_t wlen = 0;
      if (manifest.window) {
        const Window& w = *manifest.window;
        if (w.incision_relative) {
          if (!subject.incision_minute)
            throw DataError("incision-relative window but no incision_minute");
          const long long s =
              static_cast<long long>(*subject.incision_minute) + w.start;
          if (s < 0)
            throw DataError("window starts " + std::to_string(-s) +
                            " minutes before the recording begins");
          wstart = static_cast<std::size_t>(s);
        } else {
          wstart = static_cast<std::size_t>(w.start);
        }
        wlen = w.length;
      } else {
        // No window anywhere: take whole series, which must agree in length
        // across subjects.
        wlen = window_len.value_or(table.length);
        if (!window_len) window_len = wlen;
      }
      if (table.length < wstart + wlen)
        throw DataError("series covers only " + std::to_string(table.length) +
                        " minutes, window needs " +
                        std::to_string(wstart + wlen));
      for (std::size_t c = 0; c < nchan; ++c) {
        const std::string& channel = manifest.channel_names[c];
        const auto it = std::find(table.channels.begin(), table.channels.end(),
                                  channel);
        if (it == table.channels.end())
          throw DataError("channel '" + channel + "' not present in series");
        const std::size_t col =
            static_cast<std::size_t>(it - table.channels.begin());
        std::vector<double> samples(
            table.values[col].begin() + static_cast<std::ptrdiff_t>(wstart),
            table.values[col].begin() +
                static_cast<std::ptrdiff_t>(wstart + wlen));
        samples = fill_gaps(samples, options.max_missing_fraction,
                            "channel '" + channel + "'");
        RealSeries series{std::move(samples), manifest.rate_per_min};
        if (options.standardize)
          series = standardize(series, "channel '" + channel + "'");
        if (options.taper) cosine_taper(series.samples, options.taper_ramp);
        slice[c] = analytic_signal(series).samples;
      }
    } catch (const DataError& e) {
      problems.push_back("subject " + subject.id + ": " + e.what());
      continue;
    }
    kept_slices.push_back(std::move(slice));
    kept_subjects.push_back(subject);
  }

  if (!problems.empty() && !options.skip_bad) {
    std::string message = "ingestion failed for " +
                          std::to_string(problems.size()) + " subject(s):";
    for (const std::string& p : problems) message += "\n  " + p;
    throw DataError(message);
  }
  if (kept_subjects.empty())
    throw DataError("ingestion kept no subjects (all failed)");

  const std::size_t wlen = kept_slices.front().front().size();
  IngestResult result;
  result.tensor = ComplexTensor3(nchan, wlen, kept_subjects.size());
  for (std::size_t p = 0; p < kept_slices.size(); ++p)
    for (std::size_t c = 0; c < nchan; ++c) {
      if (kept_slices[p][c].size() != wlen)
        throw DataError("subject " + kept_subjects[p].id +
                        ": window length disagrees with cohort (" +
                        std::to_string(kept_slices[p][c].size()) + " vs " +
                        std::to_string(wlen) + ")");
      for (std::size_t t = 0; t < wlen; ++t)
        result.tensor(c, t, p) = kept_slices[p][c][t];
    }
  result.subjects = std::move(kept_subjects);
  for (std::string& p : problems)
    result.notes.push_back("skipped " + p);
  for (const std::string& n : manifest.notes) result.notes.push_back(n);
  return result;
}

// Synthetic cohort specification: planted low-rank structure where one
// designated component's subject weights carry a class-dependent phase
// offset, every component shares a per-subject nuisance gain (magnitude and
// phase), and complex Gaussian noise is added at a relative Frobenius level.
struct SynthSpec {
  std::array<std::size_t, 3> dims{8, 75, 60};  // channels, minutes, subjects
  std::size_t planted_rank = 3;
  std::size_t designated_component = 1;  // 0-based; carries the class phase
  std::array<double, 2> class_offsets{0.0, kPi};  // radians: mild, severe
  double phase_jitter = 0.1;          // half-width of within-class spread
  double subject_phase_spread = 2.0 * kPi;  // nuisance phase range (width)
  double subject_gain_jitter = 0.2;   // nuisance magnitude spread (+-)
  double component_decay = 0.7;       // weight of component r is decay^r
  double noise_rel = 0.0;             // relative Frobenius noise per slice
  double severe_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    const std::size_t max_bin = dims[1] % 2 == 0 ? dims[1] / 2 - 1
                                                 : (dims[1] - 1) / 2;
    if (dims[0] == 0 || dims[1] < 4 || dims[2] < 2)
      throw UsageError("synth: dims too small (need I2 >= 4, I3 >= 2)");
    if (planted_rank == 0 || planted_rank > dims[0] ||
        planted_rank > max_bin || planted_rank > dims[2])
      throw UsageError("synth: planted rank infeasible for dims");
    if (designated_component >= planted_rank)
      throw UsageError("synth: designated component must index a planted one");
    if (noise_rel < 0.0) throw UsageError("synth: noise must be nonnegative");
    if (!(severe_fraction > 0.0 && severe_fraction < 1.0))
      throw UsageError("synth: class proportion must lie in (0, 1)");
    if (subject_gain_jitter < 0.0 || subject_gain_jitter >= 1.0)
      throw UsageError("synth: gain jitter must lie in [0, 1)");
    if (component_decay <= 0.0 || component_decay > 1.0)
      throw UsageError("synth: component decay must lie in (0, 1]");
    if (phase_jitter < 0.0 || subject_phase_spread < 0.0)
      throw UsageError("synth: phase spreads must be nonnegative");
  }
};

// Planted factors after the ingestion transform (standardization rescales
// each channel, so the recoverable multivariate span is the rescaled one).
struct SynthGroundTruth {
  ComplexMatrix u1;       // channels x R, orthonormal
  ComplexMatrix u2;       // minutes x R, orthonormal (analytic tones)
  ComplexMatrix weights;  // subjects x R, post-standardization subject weights
  std::vector<std::size_t> temporal_bins;  // DFT bin of each component
  std::size_t designated_component = 0;
};

struct SynthCohort {
  ComplexTensor3 tensor;  // exactly what ingesting the exported files yields
  std::vector<SubjectRecord> subjects;
  std::vector<int> labels;  // 0 mild, 1 severe
  // Raw real series per subject: raw[p][c][t], pre-standardization.
  std::vector<std::vector<std::vector<double>>> raw;
  SynthGroundTruth truth;
};

// Deterministic synthetic cohort.  Temporal factors are single-bin analytic
// tones on distinct DFT bins, so the real series round-trips exactly through
// standardization and the analytic transform, and the exported CSV cohort
// re-ingests to the same tensor.
inline SynthCohort synth_cohort(const SynthSpec& spec) {
  spec.validate();
  const std::size_t nchan = spec.dims[0];
  const std::size_t nmin = spec.dims[1];
  const std::size_t nsubj = spec.dims[2];
  const std::size_t rank = spec.planted_rank;
  Rng rng(spec.seed);

  // Planted multivariate factors: random complex orthonormal columns.
  ComplexMatrix planted_u1(nchan, rank);
  for (std::size_t j = 0; j < rank; ++j)
    for (std::size_t i = 0; i < nchan; ++i)
      planted_u1(i, j) = rng.complex_gaussian();
  detail::mgs_orthonormalize(planted_u1);

  // Distinct strictly positive, sub-Nyquist bins keep the tones orthonormal
  // and exactly one-sided.
  const std::size_t max_bin =
      nmin % 2 == 0 ? nmin / 2 - 1 : (nmin - 1) / 2;
  std::vector<std::size_t> bins =
      rng.sample_without_replacement(max_bin, rank);
  for (std::size_t& b : bins) b += 1;
  std::vector<double> component_phase(rank);
  for (std::size_t r = 0; r < rank; ++r)
    component_phase[r] = rng.uniform(-kPi, kPi);

  ComplexMatrix u2(nmin, rank);
  const double inv_sqrt_nmin = 1.0 / std::sqrt(static_cast<double>(nmin));
  for (std::size_t r = 0; r < rank; ++r)
    for (std::size_t t = 0; t < nmin; ++t) {
      const double angle = 2.0 * kPi * static_cast<double>(bins[r]) *
                               static_cast<double>(t) /
                               static_cast<double>(nmin) +
                           component_phase[r];
      u2(t, r) = std::polar(inv_sqrt_nmin, angle);
    }

  // Class assignment honoring the requested proportion to within rounding.
  std::size_t n_severe = static_cast<std::size_t>(
      std::llround(spec.severe_fraction * static_cast<double>(nsubj)));
  n_severe = std::min(std::max<std::size_t>(n_severe, 1), nsubj - 1);
  std::vector<std::size_t> order(nsubj);
  for (std::size_t i = 0; i < nsubj; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<int> labels(nsubj, 0);
  for (std::size_t i = 0; i < n_severe; ++i) labels[order[i]] = 1;

  std::vector<double> base_weight(rank);
  for (std::size_t r = 0; r < rank; ++r)
    base_weight[r] = std::pow(spec.component_decay, static_cast<double>(r));

  SynthCohort out;
  out.labels = labels;
  out.raw.resize(nsubj);
  out.truth.u2 = u2;
  out.truth.temporal_bins = bins;
  out.truth.designated_component = spec.designated_component;
  out.truth.weights = ComplexMatrix(nsubj, rank);

  std::vector<std::vector<Complex>> slices(nsubj);
  for (std::size_t p = 0; p < nsubj; ++p) {
    const double theta = rng.uniform(-0.5 * spec.subject_phase_spread,
                                     0.5 * spec.subject_phase_spread);
    const double gain =
        1.0 + rng.uniform(-spec.subject_gain_jitter, spec.subject_gain_jitter);
    const double class_phase =
        spec.class_offsets[static_cast<std::size_t>(labels[p])] +
        rng.uniform(-spec.phase_jitter, spec.phase_jitter);
    std::vector<Complex> w(rank);
    for (std::size_t r = 0; r < rank; ++r) {
      double angle = theta;
      if (r == spec.designated_component) angle += class_phase;
      w[r] = std::polar(gain * base_weight[r], angle);
      // Post-standardization the gain magnitude cancels; record the
      // normalized weight as ground truth.
      out.truth.weights(p, r) = w[r] / gain;
    }
    std::vector<Complex> slice(nchan * nmin, Complex{});
    for (std::size_t r = 0; r < rank; ++r)
      for (std::size_t t = 0; t < nmin; ++t) {
        const Complex wt = w[r] * u2(t, r);
        for (std::size_t i = 0; i < nchan; ++i)
          slice[i + nchan * t] += planted_u1(i, r) * wt;
      }
    if (spec.noise_rel > 0.0) {
      std::vector<Complex> noise(nchan * nmin);
      double signal_sq = 0.0, noise_sq = 0.0;
      for (const Complex& z : slice) signal_sq += std::norm(z);
      for (Complex& z : noise) {
        z = rng.complex_gaussian();
        noise_sq += std::norm(z);
      }
      if (noise_sq > 0.0) {
        const double scale =
            spec.noise_rel * std::sqrt(signal_sq / noise_sq);
        for (std::size_t i = 0; i < slice.size(); ++i)
          slice[i] += scale * noise[i];
      }
    }
    slices[p] = std::move(slice);
  }

  // Raw channels are the real parts; the tensor is their ingestion
  // transform (standardize, then analytic signal).
  out.tensor = ComplexTensor3(nchan, nmin, nsubj);
  for (std::size_t p = 0; p < nsubj; ++p) {
    out.raw[p].assign(nchan, std::vector<double>(nmin));
    for (std::size_t c = 0; c < nchan; ++c) {
      RealSeries series;
      series.samples.resize(nmin);
      for (std::size_t t = 0; t < nmin; ++t) {
        const double v = slices[p][c + nchan * t].real();
        out.raw[p][c][t] = v;
        series.samples[t] = v;
      }
      const ComplexSeries analytic = analytic_signal(
          standardize(series, "synthetic channel " + std::to_string(c)));
      for (std::size_t t = 0; t < nmin; ++t)
        out.tensor(c, t, p) = analytic.samples[t];
    }
  }

  // Effective multivariate factors after standardization: channel i of the
  // noiseless unit-gain slice has SD sqrt(sum_r base_r^2 |u1(i,r)|^2 / (2 n)),
  // independent of any planted phase, so standardization is a fixed
  // per-channel rescale of the planted span.
  ComplexMatrix effective_u1(nchan, rank);
  for (std::size_t i = 0; i < nchan; ++i) {
    double var = 0.0;
    for (std::size_t r = 0; r < rank; ++r)
      var += base_weight[r] * base_weight[r] * std::norm(planted_u1(i, r));
    var /= 2.0 * static_cast<double>(nmin);
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    for (std::size_t r = 0; r < rank; ++r)
      effective_u1(i, r) = planted_u1(i, r) * scale;
  }
  detail::mgs_orthonormalize(effective_u1);
  out.truth.u1 = std::move(effective_u1);

  // Subject records: synthetic labels ride through the standard pain-score
  // path (mild -> 2, severe -> 7) so exported cohorts classify unchanged.
  char id_buf[32];
  out.subjects.resize(nsubj);
  for (std::size_t p = 0; p < nsubj; ++p) {
    std::snprintf(id_buf, sizeof(id_buf), "S%04zu", p);
    SubjectRecord& rec = out.subjects[p];
    rec.id = id_buf;
    rec.service = Service::other;
    const double score = labels[p] == 1 ? 7.0 : 2.0;
    rec.pain_day30 = score;
    rec.pain_day90 = score;
    rec.series_path = "series/" + rec.id + ".csv";
  }
  return out;
}

// Writes a synthetic cohort in the ingestion format: manifest plus one CSV
// per subject holding the raw (pre-standardization) real channels.
inline CohortManifest export_cohort(const std::filesystem::path& dir,
                                    const SynthCohort& cohort,
                                    const std::vector<std::string>& audit = {}) {
  CohortManifest manifest;
  manifest.subjects = cohort.subjects;
  manifest.base_dir = dir;
  manifest.rate_per_min = 1.0;
  const std::size_t nchan = cohort.tensor.dims()[0];
  manifest.channel_names.clear();
  const std::vector<std::string> defaults = default_channels();
  for (std::size_t c = 0; c < nchan; ++c)
    manifest.channel_names.push_back(
        c < defaults.size() ? defaults[c] : "channel_" + std::to_string(c));
  for (std::size_t p = 0; p < cohort.subjects.size(); ++p) {
    SeriesTable table;
    table.channels = manifest.channel_names;
    table.length = cohort.raw[p].empty() ? 0 : cohort.raw[p][0].size();
    table.values = cohort.raw[p];
    write_series_csv(dir / cohort.subjects[p].series_path, table, audit);
  }
  write_manifest(dir / "manifest.txt", manifest, audit);
  return manifest;
}

}  // namespace chosvd
