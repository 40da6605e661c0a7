#include "bair/cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "bair/dump_io.hpp"
#include "bair/error.hpp"
#include "bair/metrics.hpp"
#include "bair/pipeline.hpp"
#include "bair/profile.hpp"
#include "bair/report.hpp"
#include "bair/synth.hpp"

namespace bair {

namespace {

namespace fs = std::filesystem;

// Validation failures of user-supplied knobs are usage errors, not data errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
void as_usage(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

struct ConfigFlags {
  BairConfig config;
  bool no_vsmr = false;
  bool no_patp = false;
  std::string scope = "full-text";

  void attach(CLI::App& app) {
    app.add_option("--alpha-v", config.alpha_v, "Mass interpolation factor (> 0)")
        ->capture_default_str();
    app.add_option("--t-max", config.t_max, "Upper bound of the temperature search")
        ->capture_default_str();
    app.add_option("--eps", config.eps, "Sharpness tolerance")->capture_default_str();
    app.add_option("--fraction", config.boundary_fraction,
                   "Boundary window fraction for PATP, in (0, 0.5]")
        ->capture_default_str();
    app.add_flag("--no-vsmr", no_vsmr, "Disable visual sharpness and mass recovery");
    app.add_flag("--no-patp", no_patp, "Disable position-aware text penalization");
    app.add_option("--patp-scope", scope, "full-text or context-only")
        ->check(CLI::IsMember({"full-text", "context-only"}))
        ->capture_default_str();
  }

  BairConfig resolve() {
    config.enable_vsmr = !no_vsmr;
    config.enable_patp = !no_patp;
    config.patp_scope =
        scope == "context-only" ? PatpScope::kContextOnly : PatpScope::kFullText;
    as_usage([&] { config.validate(); });
    return config;
  }
};

struct ScenarioFlags {
  ScenarioParams params;
  std::string side = "tail";
  int gt_segment = 0;
  double threshold = kDefaultToyThreshold;
  SuiteOptions defaults;

  void attach(CLI::App& app) {
    app.add_option("--n-visual", params.n_visual, "Visual tokens per row")->capture_default_str();
    app.add_option("--n-text", params.n_text, "Text tokens per row")->capture_default_str();
    app.add_option("--spike", params.visual_spike_strength, "Visual evidence spike")
        ->capture_default_str();
    app.add_option("--suppression", params.suppression_delta,
                   "Logit drop applied to visual tokens in the RAG row")
        ->capture_default_str();
    app.add_option("--boundary-spike", params.boundary_spike_strength,
                   "Logit boost on the spiked boundary text tokens")
        ->capture_default_str();
    app.add_option("--side", side, "Spiked boundary: head, tail or both")
        ->check(CLI::IsMember({"head", "tail", "both"}))
        ->capture_default_str();
    app.add_option("--gt-segment", gt_segment,
                   "Fix the evidence segment (1-5); default draws it per scenario");
    app.add_option("--noise", params.noise_scale, "Gaussian background scale")
        ->capture_default_str();
    app.add_option("--evidence", params.text_evidence_strength,
                   "Text logit bump on the evidence segment")
        ->capture_default_str();
    app.add_option("--threshold", threshold, "Toy visual-mass decision threshold")
        ->capture_default_str();
    app.add_option("--hard-fraction", defaults.hard_fraction,
                   "Share of scenarios with weak image evidence")
        ->capture_default_str();
    app.add_option("--hard-spike", defaults.hard_spike_strength,
                   "Visual spike used for the weak-evidence scenarios")
        ->capture_default_str();
  }

  SuiteOptions resolve(std::size_t n, std::uint64_t seed, const BairConfig& config) {
    SuiteOptions o = defaults;
    o.n = n;
    o.seed = seed;
    o.params = params;
    o.params.boundary_side = parse_boundary_side(side);
    o.vary_segment = gt_segment == 0;
    if (gt_segment != 0) o.params.gt_segment = gt_segment;
    o.config = config;
    o.threshold = threshold;
    as_usage([&] {
      o.params.validate();
      if (!(o.hard_fraction >= 0.0 && o.hard_fraction <= 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "--hard-fraction must lie in [0, 1]");
      }
    });
    return o;
  }
};

void run_calibrate(const fs::path& dump_path, const fs::path& reference_path,
                   const fs::path& out_path, fs::path report_path,
                   const fs::path& targets_out, Encoding encoding,
                   const BairConfig& config, std::ostream& out) {
  const auto reference = read_dump(reference_path);
  const auto rag = read_dump(dump_path);
  const CalibrationTargets targets = extract_targets(
      reference, reference.empty() ? reference_path.string() : reference.front().sample_id);
  const CalibratedDump result = calibrate_dump(rag, targets, config);
  write_dump(result.vectors, out_path, encoding);
  if (report_path.empty()) report_path = out_path.string() + ".diag.tsv";
  write_text_file(report_path, diagnostics_table(result.diagnostics));
  if (!targets_out.empty()) write_targets(targets, targets_out);
  out << summary_text(result.summary);
}

std::string comparison_text(const MetricsReport& report) {
  std::string out;
  if (!report.rag || !report.intervention) return out;
  const auto& rag = *report.rag;
  const auto& bair = *report.intervention;
  const auto ratio = [](const RateRatio& r) {
    switch (r.kind) {
      case RateRatio::Kind::kFinite: return format_number(r.value);
      case RateRatio::Kind::kInfinite: return std::string("inf");
      case RateRatio::Kind::kUndefined: break;
    }
    return std::string("undefined");
  };
  // An infinite ratio beats any finite one; undefined never improves.
  const auto rank = [](const RateRatio& r) {
    switch (r.kind) {
      case RateRatio::Kind::kInfinite: return std::numeric_limits<double>::infinity();
      case RateRatio::Kind::kFinite: return r.value;
      case RateRatio::Kind::kUndefined: break;
    }
    return -1.0;
  };
  out += "dr.rag\t" + format_number(rag.dr.value) + '\n';
  out += "dr.bair\t" + format_number(bair.dr.value) + '\n';
  out += std::string("dr.reduced\t") + (bair.dr.value < rag.dr.value ? "yes" : "no") + '\n';
  out += "cr_dr.rag\t" + ratio(rag.cr_dr_ratio) + '\n';
  out += "cr_dr.bair\t" + ratio(bair.cr_dr_ratio) + '\n';
  out += std::string("cr_dr.improved\t") +
         (rank(bair.cr_dr_ratio) > rank(rag.cr_dr_ratio) ? "yes" : "no") + '\n';
  if (report.sr) {
    out += "cure_rate\t" + format_number(report.sr->value) + '\t' +
           std::to_string(report.sr->denominator) + " recorrupted\n";
  }
  return out;
}

void run_synth(const SuiteOptions& options, const fs::path& dir, Encoding encoding,
               std::ostream& out) {
  const SuiteResult suite = run_suite(options);
  fs::create_directories(dir);
  std::string scenarios = "sample_id\tseed\tgt_visual_index\tgt_segment\trag_answer\n";
  for (std::size_t i = 0; i < suite.scenarios.size(); ++i) {
    const Scenario& sc = suite.scenarios[i];
    const std::vector<BottleneckVector> clean{sc.clean}, corrupted{sc.corrupted};
    write_dump(clean, dir / (sc.clean.sample_id + ".reference.bdump"), encoding);
    write_dump(corrupted, dir / (sc.clean.sample_id + ".rag.bdump"), encoding);
    scenarios += sc.clean.sample_id + '\t' + std::to_string(sc.params.seed) + '\t' +
                 std::to_string(sc.gt_visual_index) + '\t' +
                 std::to_string(sc.gt_text_segment) + '\t' +
                 std::string(to_string(suite.rag_answers[i])) + '\n';
  }
  write_scores(suite.records, dir / "scores.tsv");
  write_text_file(dir / "scenarios.tsv", scenarios);
  out << "scenarios\t" << suite.scenarios.size() << '\n'
      << "directory\t" << dir.string() << '\n';
}

void run_e2e(const SuiteOptions& options, std::ostream& out) {
  const SuiteResult suite = run_suite(options);
  out << "# e2e\tn=" << options.n << "\tseed=" << options.seed << '\n';
  out << "## calibration\n" << summary_text(summarize(suite.diagnostics));
  if (suite.records.empty()) return;
  const MetricsReport report = evaluate(suite.records);
  out << "## metrics\n" << metrics_text(report);
  out << "## comparison\n" << comparison_text(report);

  // Scenarios whose reference pass already routes through the image.
  std::vector<EvalRecord> visual_clear;
  for (std::size_t i = 0; i < suite.records.size(); ++i) {
    if (suite.diagnostics[i].m_target >= options.threshold) {
      visual_clear.push_back(suite.records[i]);
    }
  }
  const Rate clear_cure = strictly_cured_rate(apply_failure_zeroing(visual_clear));
  out << "cure_rate.visual_clear\t" << format_number(clear_cure.value) << '\t'
      << clear_cure.denominator << " recorrupted\n";

  BootstrapOptions boot;
  boot.seed = options.seed;
  const auto rag_samples = segment_samples(suite, Method::kRag);
  const auto bair_samples = segment_samples(suite, Method::kIntervention);
  out << "## rag accuracy by evidence segment\n"
      << segment_table(segment_accuracy(rag_samples, boot));
  out << "## bair accuracy by evidence segment\n"
      << segment_table(segment_accuracy(bair_samples, boot));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bottleneck attention calibration and recorruption diagnostics", "bair"};
  app.require_subcommand(1);

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate a RAG-pass dump against a reference pass");
  std::string cal_dump, cal_ref, cal_out, cal_report, cal_targets, cal_encoding = "binary";
  ConfigFlags cal_flags;
  calibrate->add_option("--dump", cal_dump, "RAG-pass dump")->required();
  calibrate->add_option("--reference", cal_ref, "Reference-pass dump")->required();
  calibrate->add_option("--out", cal_out, "Calibrated dump to write")->required();
  calibrate->add_option("--report", cal_report, "Diagnostics table (default <out>.diag.tsv)");
  calibrate->add_option("--targets-out", cal_targets, "Also write the extracted targets");
  calibrate->add_option("--encoding", cal_encoding, "inline or binary")
      ->check(CLI::IsMember({"inline", "binary"}))
      ->capture_default_str();
  cal_flags.attach(*calibrate);

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Per-head visual mass and sharpness");
  std::string diag_dump;
  diagnose->add_option("--dump", diag_dump, "Dump to measure")->required();

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Recorruption metrics from a scores file");
  std::string met_scores;
  double met_threshold = kDefaultCorrectnessThreshold;
  metrics->add_option("--scores", met_scores, "Scores file")->required();
  metrics->add_option("--threshold", met_threshold, "Correctness threshold for transitions")
      ->capture_default_str();

  // profile
  auto* profile = app.add_subcommand("profile", "ROUGE-L positional profile of a response");
  std::string prof_response, prof_document, prof_label;
  std::size_t prof_bins = kDefaultProfileBins;
  profile->add_option("--response", prof_response, "Response text file")->required();
  profile->add_option("--document", prof_document, "Document text file")->required();
  profile->add_option("--bins", prof_bins, "Number of position bins")->capture_default_str();
  profile->add_option("--label", prof_label, "Method label column");

  // segments
  auto* segments = app.add_subcommand("segments", "Evidence-segment accuracy with bootstrap intervals");
  std::string seg_samples;
  std::uint64_t seg_seed = 0;
  std::size_t seg_resamples = 1000;
  int seg_count = kDefaultSegments;
  segments->add_option("--samples", seg_samples, "Samples file")->required();
  segments->add_option("--seed", seg_seed, "Bootstrap seed")->capture_default_str();
  segments->add_option("--resamples", seg_resamples, "Bootstrap resamples")->capture_default_str();
  segments->add_option("--segments", seg_count, "Number of segments")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic recorruption suite");
  std::size_t syn_n = 0;
  std::uint64_t syn_seed = 0;
  std::string syn_out, syn_encoding = "binary";
  ConfigFlags syn_cfg;
  ScenarioFlags syn_sc;
  synth->add_option("--n", syn_n, "Number of scenarios")->required();
  synth->add_option("--seed", syn_seed, "Suite seed")->required();
  synth->add_option("--out", syn_out, "Output directory")->required();
  synth->add_option("--encoding", syn_encoding, "inline or binary")
      ->check(CLI::IsMember({"inline", "binary"}))
      ->capture_default_str();
  syn_cfg.attach(*synth);
  syn_sc.attach(*synth);

  // e2e
  auto* e2e = app.add_subcommand("e2e", "Synthesize, calibrate and score in one run");
  std::size_t e2e_n = 0;
  std::uint64_t e2e_seed = 0;
  ConfigFlags e2e_cfg;
  ScenarioFlags e2e_sc;
  e2e->add_option("--n", e2e_n, "Number of scenarios")->required();
  e2e->add_option("--seed", e2e_seed, "Suite seed")->required();
  e2e_cfg.attach(*e2e);
  e2e_sc.attach(*e2e);

  std::vector<std::string> argv_storage{"bair"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, err, err);
    if (code == 0) return kExitOk;
    const auto active = app.get_subcommands();
    err << (active.empty() ? app.help() : active.back()->help());
    return kExitUsage;
  }

  try {
    if (calibrate->parsed()) {
      const BairConfig config = cal_flags.resolve();
      run_calibrate(cal_dump, cal_ref, cal_out, cal_report, cal_targets,
                    parse_encoding(cal_encoding), config, out);
    } else if (diagnose->parsed()) {
      out << measure_table(read_dump(diag_dump));
    } else if (metrics->parsed()) {
      out << metrics_text(evaluate(read_scores(met_scores), met_threshold));
    } else if (profile->parsed()) {
      const Tokens response = tokenize(read_text_file(prof_response));
      const Tokens document = tokenize(read_text_file(prof_document));
      out << profile_table(positional_profile(response, document, prof_bins, prof_label));
    } else if (segments->parsed()) {
      const auto labeled = parse_segment_samples(read_text_file(seg_samples), seg_samples);
      std::vector<SegmentSample> samples;
      std::string assignments = "sample_id\tsegment\tmatches\n";
      for (const auto& s : labeled) {
        SegmentSample sample{classify_segment(s.evidence, s.document, seg_count), s.score};
        std::string matches;
        for (int m : sample.assignment.match_positions) {
          matches += (matches.empty() ? "" : ",") + std::to_string(m);
        }
        assignments += s.sample_id + '\t' +
                       (sample.assignment.segment ? std::to_string(*sample.assignment.segment)
                                                  : std::string("none")) +
                       '\t' + (matches.empty() ? "-" : matches) + '\n';
        samples.push_back(std::move(sample));
      }
      BootstrapOptions boot;
      boot.seed = seg_seed;
      boot.resamples = seg_resamples;
      boot.segments = seg_count;
      out << assignments << segment_table(segment_accuracy(samples, boot));
    } else if (synth->parsed()) {
      const SuiteOptions options = syn_sc.resolve(syn_n, syn_seed, syn_cfg.resolve());
      run_synth(options, syn_out, parse_encoding(syn_encoding), out);
    } else if (e2e->parsed()) {
      run_e2e(e2e_sc.resolve(e2e_n, e2e_seed, e2e_cfg.resolve()), out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error[" << to_string(e.code()) << "]: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error[" << to_string(ErrorCode::kIo) << "]: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace bair
