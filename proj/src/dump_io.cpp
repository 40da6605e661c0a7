#include "bair/dump_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bair/error.hpp"

namespace bair {

using nlohmann::json;

std::string_view to_string(Encoding encoding) {
  return encoding == Encoding::kInline ? "inline" : "binary";
}

Encoding parse_encoding(std::string_view text) {
  if (text == "inline") return Encoding::kInline;
  if (text == "binary") return Encoding::kBinary;
  throw Error(ErrorCode::kInvalidArgument,
              "encoding must be inline or binary, got '" + std::string(text) + "'");
}

namespace {

[[noreturn]] void fail(ErrorCode code, std::string_view source, const std::string& msg) {
  throw Error(code, std::string(source) + ": " + msg);
}

json span_json(const Span& s) { return json::array({s.start, s.length}); }

Span span_from(const json& j, std::string_view source, const char* key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() ||
      !j[1].is_number_unsigned()) {
    fail(ErrorCode::kParse, source, std::string("manifest field '") + key +
                                        "' must be [start, length]");
  }
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

float to_storage(double x, std::string_view where) {
  const auto f = static_cast<float>(x);
  if (!std::isfinite(f)) {
    fail(ErrorCode::kNonFinite, where, "value not representable as float32");
  }
  return f;
}

void append_float(std::string& out, float f) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, f);
  out.append(buf, res.ptr);
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(std::string_view text, std::string_view source,
                    const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    fail(ErrorCode::kParse, source,
         where + ": cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Lines without the trailing newline; tolerates CRLF and a final newline.
std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  }
  return lines;
}

}  // namespace

std::string serialize_dump(std::span<const BottleneckVector> vectors,
                           Encoding encoding) {
  std::vector<const BottleneckVector*> rows;
  for (const auto& v : vectors) rows.push_back(&v);
  std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    return HeadKey{a->layer, a->head} < HeadKey{b->layer, b->head};
  });

  std::set<int> layers, heads;
  for (const auto* v : rows) {
    layers.insert(v->layer);
    heads.insert(v->head);
  }
  const std::string where = "write_dump";
  if (rows.size() != layers.size() * heads.size()) {
    fail(ErrorCode::kLayoutMismatch, where,
         "vectors do not form a full layers x heads grid (or repeat a head)");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto* v = rows[i];
    v->validate();
    if (v->layout != rows.front()->layout || v->sample_id != rows.front()->sample_id) {
      fail(ErrorCode::kLayoutMismatch, where,
           "all vectors in a dump must share sample_id and layout");
    }
    if (i > 0 && HeadKey{v->layer, v->head} ==
                     HeadKey{rows[i - 1]->layer, rows[i - 1]->head}) {
      fail(ErrorCode::kDuplicateTarget, where,
           "duplicate " + to_string(HeadKey{v->layer, v->head}));
    }
  }

  const ModalityLayout layout = rows.empty() ? ModalityLayout{} : rows.front()->layout;
  json manifest;
  manifest["format_version"] = kDumpFormatVersion;
  manifest["sample_id"] = rows.empty() ? std::string() : rows.front()->sample_id;
  manifest["sequence_len"] = layout.sequence_len;
  manifest["visual_span"] = span_json(layout.visual);
  manifest["text_span"] = span_json(layout.text);
  manifest["context_span"] = layout.context ? span_json(*layout.context) : json(nullptr);
  manifest["layers"] = std::vector<int>(layers.begin(), layers.end());
  manifest["heads"] = std::vector<int>(heads.begin(), heads.end());
  manifest["encoding"] = to_string(encoding);
  manifest["value_count"] = rows.size() * layout.sequence_len;

  std::string out(kDumpFormatVersion);
  out += '\n';
  out += manifest.dump();
  out += '\n';
  for (const auto* v : rows) {
    const std::string ctx = "write_dump " + to_string(HeadKey{v->layer, v->head});
    if (encoding == Encoding::kInline) {
      for (std::size_t i = 0; i < v->logits.size(); ++i) {
        if (i > 0) out += ' ';
        append_float(out, to_storage(v->logits[i], ctx));
      }
      out += '\n';
    } else {
      for (double x : v->logits) {
        const auto bits = std::bit_cast<std::uint32_t>(to_storage(x, ctx));
        for (int b = 0; b < 4; ++b) out += static_cast<char>((bits >> (8 * b)) & 0xFFu);
      }
    }
  }
  return out;
}

std::vector<BottleneckVector> parse_dump(std::string_view bytes, std::string_view source) {
  const auto nl1 = bytes.find('\n');
  if (nl1 == std::string_view::npos) fail(ErrorCode::kParse, source, "missing header");
  std::string_view version = bytes.substr(0, nl1);
  if (!version.empty() && version.back() == '\r') version.remove_suffix(1);
  if (version != kDumpFormatVersion) {
    if (version.starts_with("bair-dump/")) {
      fail(ErrorCode::kVersionMismatch, source,
           "unsupported format version '" + std::string(version) + "', expected " +
               std::string(kDumpFormatVersion));
    }
    fail(ErrorCode::kParse, source, "not a bair dump (bad magic line)");
  }
  const auto nl2 = bytes.find('\n', nl1 + 1);
  if (nl2 == std::string_view::npos) fail(ErrorCode::kParse, source, "missing manifest");

  json manifest;
  try {
    manifest = json::parse(bytes.substr(nl1 + 1, nl2 - nl1 - 1));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, source, std::string("manifest: ") + e.what());
  }

  std::size_t n = 0, value_count = 0;
  std::vector<int> layers, heads;
  ModalityLayout layout;
  std::string sample_id;
  Encoding encoding = Encoding::kInline;
  try {
    if (manifest.at("format_version").get<std::string>() != kDumpFormatVersion) {
      fail(ErrorCode::kVersionMismatch, source, "manifest format_version mismatch");
    }
    sample_id = manifest.at("sample_id").get<std::string>();
    n = manifest.at("sequence_len").get<std::size_t>();
    layers = manifest.at("layers").get<std::vector<int>>();
    heads = manifest.at("heads").get<std::vector<int>>();
    encoding = parse_encoding(manifest.at("encoding").get<std::string>());
    value_count = manifest.at("value_count").get<std::size_t>();
    layout.sequence_len = n;
    layout.visual = span_from(manifest.at("visual_span"), source, "visual_span");
    layout.text = span_from(manifest.at("text_span"), source, "text_span");
    if (!manifest.at("context_span").is_null()) {
      layout.context = span_from(manifest.at("context_span"), source, "context_span");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, source, std::string("manifest: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) {
      fail(ErrorCode::kParse, source, e.what());
    }
    throw;
  }

  const std::size_t rows = layers.size() * heads.size();
  if (value_count != rows * n) {
    fail(ErrorCode::kLengthMismatch, source,
         "manifest value_count " + std::to_string(value_count) + " but inventory implies " +
             std::to_string(rows * n));
  }
  if (rows == 0) return {};
  try {
    layout.validate();
  } catch (const Error& e) {
    fail(e.code(), source, e.what());
  }

  const std::string_view payload = bytes.substr(nl2 + 1);
  std::vector<double> values;
  values.reserve(value_count);
  if (encoding == Encoding::kBinary) {
    if (payload.size() != value_count * 4) {
      fail(ErrorCode::kLengthMismatch, source,
           "length mismatch: expected " + std::to_string(value_count) +
               " float32 values (" + std::to_string(value_count * 4) + " bytes), found " +
               std::to_string(payload.size()) + " bytes (" +
               std::to_string(payload.size() / 4) + " values)");
    }
    for (std::size_t i = 0; i < value_count; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[4 * i + b]))
                << (8 * b);
      }
      values.push_back(static_cast<double>(std::bit_cast<float>(bits)));
    }
  } else {
    const auto lines = lines_of(payload);
    if (lines.size() != rows) {
      fail(ErrorCode::kLengthMismatch, source,
           "length mismatch: expected " + std::to_string(rows) + " rows, found " +
               std::to_string(lines.size()));
    }
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t count = 0;
      for (auto tok : split(lines[r], ' ')) {
        if (tok.empty()) continue;
        float f = 0.0f;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), f);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
          fail(ErrorCode::kParse, source,
               "row " + std::to_string(r) + ": bad value '" + std::string(tok) + "'");
        }
        values.push_back(static_cast<double>(f));
        ++count;
      }
      if (count != n) {
        fail(ErrorCode::kLengthMismatch, source,
             "length mismatch: row " + std::to_string(r) + " has " + std::to_string(count) +
                 " values, expected " + std::to_string(n));
      }
    }
  }

  std::vector<BottleneckVector> out;
  out.reserve(rows);
  std::size_t offset = 0;
  for (int layer : layers) {
    for (int head : heads) {
      BottleneckVector v;
      v.layer = layer;
      v.head = head;
      v.sample_id = sample_id;
      v.layout = layout;
      v.logits.assign(values.begin() + static_cast<std::ptrdiff_t>(offset),
                      values.begin() + static_cast<std::ptrdiff_t>(offset + n));
      offset += n;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(v.logits[i])) {
          fail(ErrorCode::kNonFinite, source,
               "non-finite value at " + to_string(HeadKey{layer, head}) + " position " +
                   std::to_string(i));
        }
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, path.string() + ": read failed");
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, path.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, path.string() + ": write failed");
}

void write_dump(std::span<const BottleneckVector> vectors,
                const std::filesystem::path& path, Encoding encoding) {
  write_text_file(path, serialize_dump(vectors, encoding));
}

std::vector<BottleneckVector> read_dump(const std::filesystem::path& path) {
  return parse_dump(read_text_file(path), path.string());
}

std::string serialize_targets(const CalibrationTargets& targets) {
  std::string out(kTargetsFormatVersion);
  out += "\tsource_id=" + escape_field(targets.source_id) + "\n";
  out += "layer\thead\tm_target\ts_target\tn_visual\tmass_clamped\n";
  for (const auto& [key, e] : targets.entries) {
    out += std::to_string(key.layer) + '\t' + std::to_string(key.head) + '\t' +
           format_double(e.m_target) + '\t' + format_double(e.s_target) + '\t' +
           std::to_string(e.n_visual) + '\t' + (e.mass_clamped ? "1" : "0") + '\n';
  }
  return out;
}

CalibrationTargets parse_targets(std::string_view text, std::string_view source) {
  const auto lines = lines_of(text);
  if (lines.size() < 2) fail(ErrorCode::kParse, source, "missing targets header");
  const auto head = split(lines[0], '\t');
  if (head[0] != kTargetsFormatVersion) {
    fail(head[0].starts_with("bair-targets/") ? ErrorCode::kVersionMismatch
                                              : ErrorCode::kParse,
         source, "unsupported targets version '" + std::string(head[0]) + "'");
  }
  CalibrationTargets t;
  if (head.size() > 1 && head[1].starts_with("source_id=")) {
    t.source_id = unescape_field(head[1].substr(10));
  }
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto f = split(lines[i], '\t');
    const std::string where = "line " + std::to_string(i + 1);
    if (f.size() != 6) fail(ErrorCode::kParse, source, where + ": expected 6 fields");
    const HeadKey key{static_cast<int>(parse_double(f[0], source, where)),
                      static_cast<int>(parse_double(f[1], source, where))};
    TargetEntry e;
    e.m_target = parse_double(f[2], source, where);
    e.s_target = parse_double(f[3], source, where);
    e.n_visual = static_cast<std::size_t>(parse_double(f[4], source, where));
    e.mass_clamped = f[5] == "1";
    if (!(e.m_target >= 0.0 && e.m_target <= 1.0 && e.s_target >= 0.0 &&
          e.s_target <= 1.0)) {
      fail(ErrorCode::kInvalidArgument, source, where + ": target outside [0, 1]");
    }
    if (!t.entries.emplace(key, e).second) {
      fail(ErrorCode::kDuplicateTarget, source, where + ": duplicate " + to_string(key));
    }
  }
  return t;
}

void write_targets(const CalibrationTargets& targets, const std::filesystem::path& path) {
  write_text_file(path, serialize_targets(targets));
}

CalibrationTargets read_targets(const std::filesystem::path& path) {
  return parse_targets(read_text_file(path), path.string());
}

std::string escape_field(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    if (escaped[i] != '\\' || i + 1 == escaped.size()) {
      out += escaped[i];
      continue;
    }
    switch (escaped[++i]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: out += escaped[i];
    }
  }
  return out;
}

std::string serialize_scores(std::span<const EvalRecord> records) {
  const bool any_rag = std::any_of(records.begin(), records.end(),
                                   [](const auto& r) { return r.score_rag.has_value(); });
  const bool any_int = std::any_of(records.begin(), records.end(), [](const auto& r) {
    return r.score_intervention.has_value();
  });
  const bool any_text = std::any_of(records.begin(), records.end(),
                                    [](const auto& r) { return r.response_text.has_value(); });
  std::string out = "sample_id\tS_B";
  if (any_rag) out += "\tS_R";
  if (any_int) out += "\tS_I";
  if (any_text) out += "\tresponse_text";
  out += '\n';
  const auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const auto& r : records) {
    out += escape_field(r.sample_id) + '\t' + format_double(r.score_baseline);
    if (any_rag) out += '\t' + opt(r.score_rag);
    if (any_int) out += '\t' + opt(r.score_intervention);
    if (any_text) out += '\t' + (r.response_text ? escape_field(*r.response_text) : "");
    out += '\n';
  }
  return out;
}

namespace {

struct Table {
  std::map<std::string, std::size_t, std::less<>> columns;
  std::vector<std::vector<std::string_view>> rows;
  std::vector<std::size_t> line_numbers;

  std::optional<std::string_view> cell(std::size_t row, std::string_view name) const {
    auto it = columns.find(name);
    if (it == columns.end()) return std::nullopt;
    return rows[row][it->second];
  }
};

Table parse_table(std::string_view text, std::string_view source,
                  std::initializer_list<std::string_view> required) {
  const auto lines = lines_of(text);
  if (lines.empty()) fail(ErrorCode::kParse, source, "missing header row");
  Table t;
  const auto header = split(lines[0], '\t');
  for (std::size_t i = 0; i < header.size(); ++i) {
    t.columns.emplace(std::string(header[i]), i);
  }
  for (auto name : required) {
    if (!t.columns.contains(name)) {
      fail(ErrorCode::kParse, source, "missing required column '" + std::string(name) + "'");
    }
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = split(lines[i], '\t');
    if (fields.size() != header.size()) {
      fail(ErrorCode::kParse, source,
           "line " + std::to_string(i + 1) + ": expected " + std::to_string(header.size()) +
               " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(i + 1);
  }
  return t;
}

double parse_score(std::string_view cell, std::string_view source, const std::string& where) {
  const double v = parse_double(cell, source, where);
  if (!(v >= 0.0 && v <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, source, where + ": score " + std::string(cell) +
                                                  " outside [0, 1]");
  }
  return v;
}

}  // namespace

std::vector<EvalRecord> parse_scores(std::string_view text, std::string_view source) {
  const Table t = parse_table(text, source, {"sample_id", "S_B"});
  std::vector<EvalRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = "line " + std::to_string(t.line_numbers[r]);
    EvalRecord rec;
    rec.sample_id = unescape_field(*t.cell(r, "sample_id"));
    rec.score_baseline = parse_score(*t.cell(r, "S_B"), source, where);
    if (auto c = t.cell(r, "S_R"); c && !c->empty()) rec.score_rag = parse_score(*c, source, where);
    if (auto c = t.cell(r, "S_I"); c && !c->empty()) {
      rec.score_intervention = parse_score(*c, source, where);
    }
    if (auto c = t.cell(r, "response_text"); c && !c->empty()) {
      rec.response_text = unescape_field(*c);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_scores(std::span<const EvalRecord> records, const std::filesystem::path& path) {
  write_text_file(path, serialize_scores(records));
}

std::vector<EvalRecord> read_scores(const std::filesystem::path& path) {
  return parse_scores(read_text_file(path), path.string());
}

std::vector<LabeledSample> parse_segment_samples(std::string_view text,
                                                 std::string_view source) {
  const Table t = parse_table(text, source, {"sample_id", "evidence", "document", "score"});
  std::vector<LabeledSample> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = "line " + std::to_string(t.line_numbers[r]);
    LabeledSample s;
    s.sample_id = unescape_field(*t.cell(r, "sample_id"));
    s.evidence = unescape_field(*t.cell(r, "evidence"));
    s.document = unescape_field(*t.cell(r, "document"));
    s.score = parse_score(*t.cell(r, "score"), source, where);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bair
