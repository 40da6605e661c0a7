#include "bair/report.hpp"

#include <cstdio>

namespace bair {

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

namespace {

std::string flag(bool b) { return b ? "1" : "0"; }

std::string rate_row(std::string_view name, const Rate& r) {
  return std::string(name) + '\t' + format_number(r.value) + '\t' +
         std::to_string(r.denominator) + '\t' + (r.defined ? "defined" : "undefined") + '\n';
}

std::string ratio_text(const RateRatio& r) {
  switch (r.kind) {
    case RateRatio::Kind::kFinite: return format_number(r.value);
    case RateRatio::Kind::kInfinite: return "inf";
    case RateRatio::Kind::kUndefined: return "undefined";
  }
  return "undefined";
}

void append_method(std::string& out, const MethodMetrics& m) {
  const std::string p(to_string(m.method));
  out += p + ".accuracy\t" + format_number(m.accuracy) + '\t' +
         format_percent(m.accuracy) + "%\n";
  out += rate_row(p + ".cr", m.cr);
  out += rate_row(p + ".dr", m.dr);
  out += p + ".cr_dr_ratio\t" + ratio_text(m.cr_dr_ratio) + '\n';
  const auto& t = m.transitions;
  out += p + ".transition.correct_to_correct\t" + std::to_string(t.correct_to_correct) + '\n';
  out += p + ".transition.correct_to_incorrect\t" + std::to_string(t.correct_to_incorrect) + '\n';
  out += p + ".transition.incorrect_to_correct\t" + std::to_string(t.incorrect_to_correct) + '\n';
  out += p + ".transition.incorrect_to_incorrect\t" +
         std::to_string(t.incorrect_to_incorrect) + '\n';
}

}  // namespace

std::string diagnostics_table(std::span<const HeadDiagnostics> diagnostics) {
  std::string out =
      "sample_id\tlayer\thead\tm_target\ts_target\tpre_mass\tpre_sharpness\t"
      "post_mass\tpost_sharpness\tt_star\titerations\tachieved_sharpness\talpha_shift\t"
      "lambda_prim\tlambda_rec\tdegenerate_visual\tsharpness_clamped\ttargets_clamped\n";
  for (const auto& d : diagnostics) {
    out += d.sample_id + '\t' + std::to_string(d.key.layer) + '\t' +
           std::to_string(d.key.head) + '\t' + format_number(d.m_target) + '\t' +
           format_number(d.s_target) + '\t' + format_number(d.pre_measure.mass) + '\t' +
           format_number(d.pre_measure.sharpness) + '\t' + format_number(d.post_measure.mass) +
           '\t' + format_number(d.post_measure.sharpness) + '\t' +
           format_number(d.temperature.t_star) + '\t' + std::to_string(d.temperature.iterations) +
           '\t' + format_number(d.temperature.achieved_sharpness) + '\t' +
           format_number(d.alpha_shift) + '\t' + format_number(d.penalty_weights.lambda_prim) +
           '\t' + format_number(d.penalty_weights.lambda_rec) + '\t' +
           flag(d.flags.degenerate_visual) + '\t' + flag(d.flags.sharpness_clamped) + '\t' +
           flag(d.flags.targets_clamped) + '\n';
  }
  return out;
}

std::string summary_text(const DumpSummary& s) {
  std::string out;
  out += "heads\t" + std::to_string(s.heads) + '\n';
  out += "mean_pre_mass\t" + format_number(s.mean_pre_mass) + '\n';
  out += "mean_post_mass\t" + format_number(s.mean_post_mass) + '\n';
  out += "mean_pre_sharpness\t" + format_number(s.mean_pre_sharpness) + '\n';
  out += "mean_post_sharpness\t" + format_number(s.mean_post_sharpness) + '\n';
  out += "sharpness_clamped\t" + std::to_string(s.sharpness_clamped) + '\n';
  out += "degenerate_visual\t" + std::to_string(s.degenerate_visual) + '\n';
  out += "targets_clamped\t" + std::to_string(s.targets_clamped) + '\n';
  out += "mean_lambda_prim\t" + format_number(s.mean_lambda_prim) + '\n';
  out += "mean_lambda_rec\t" + format_number(s.mean_lambda_rec) + '\n';
  out += "max_lambda_prim\t" + format_number(s.max_lambda_prim) + '\n';
  out += "max_lambda_rec\t" + format_number(s.max_lambda_rec) + '\n';
  out += "median_iterations\t" + std::to_string(s.median_iterations) + '\n';
  return out;
}

std::string measure_table(std::span<const BottleneckVector> vectors) {
  std::string out = "sample_id\tlayer\thead\tn_visual\tn_text\tmass\tsharpness\n";
  for (const auto& v : vectors) {
    const AttentionMeasure m = measure(v);
    out += v.sample_id + '\t' + std::to_string(v.layer) + '\t' + std::to_string(v.head) +
           '\t' + std::to_string(v.layout.visual.length) + '\t' +
           std::to_string(v.layout.text.length) + '\t' + format_number(m.mass) + '\t' +
           format_number(m.sharpness) + '\n';
  }
  return out;
}

std::string metrics_text(const MetricsReport& r) {
  std::string out = "metric\tvalue\tdenominator\tstatus\n";
  out += "samples\t" + std::to_string(r.samples) + '\n';
  out += "threshold\t" + format_number(r.threshold) + '\n';
  out += "baseline.accuracy\t" + format_number(r.baseline_accuracy) + '\t' +
         format_percent(r.baseline_accuracy) + "%\n";
  if (r.rag) append_method(out, *r.rag);
  if (r.intervention) append_method(out, *r.intervention);
  if (r.rr) out += rate_row("rr", *r.rr);
  if (r.sr) out += rate_row("sr", *r.sr);
  if (r.nr) out += rate_row("nr", *r.nr);
  if (r.gfr) out += "gfr\t" + format_number(*r.gfr) + '\n';
  out += "failed_generations\t" + std::to_string(r.failed_generations) + '\n';
  return out;
}

std::string profile_table(const PositionalProfile& p) {
  std::string out = "bin\tstart\tend\ttokens\trouge_l";
  if (!p.method_label.empty()) out += "\tlabel";
  out += '\n';
  for (std::size_t k = 0; k < p.values.size(); ++k) {
    out += std::to_string(k + 1) + '\t' + format_number(p.bin_edges[k]) + '\t' +
           format_number(p.bin_edges[k + 1]) + '\t' + std::to_string(p.bin_sizes[k]) + '\t' +
           format_number(p.values[k]);
    if (!p.method_label.empty()) out += '\t' + p.method_label;
    out += '\n';
  }
  return out;
}

std::string segment_table(std::span<const SegmentAccuracy> rows) {
  std::string out = "segment\tsamples\tmean\tci_low\tci_high\n";
  for (const auto& a : rows) {
    out += "Seg-" + std::to_string(a.segment) + '\t' + std::to_string(a.samples) + '\t';
    if (a.empty()) {
      out += "empty\tempty\tempty\n";
    } else {
      out += format_number(a.mean) + '\t' + format_number(a.ci_low) + '\t' +
             format_number(a.ci_high) + '\n';
    }
  }
  return out;
}

}  // namespace bair
