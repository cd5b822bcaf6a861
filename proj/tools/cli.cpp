#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddghash/corpus_store.hpp"
#include "ddghash/errors.hpp"

namespace ddghash::cli {

namespace {

using nlohmann::json;

enum class Format { text, json, csv };

struct Config {
  std::string corpus = ".";
  Format format = Format::text;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json rational_json(const Rational& r) {
  return {{"num", r.num()}, {"den", r.den()}, {"decimal", r.decimal(3)}};
}

json report_json(const SimilarityReport& r) {
  return {{"a_id", r.a_id},
          {"b_id", r.b_id},
          {"size_a", r.size_a},
          {"size_b", r.size_b},
          {"intersection", r.intersection},
          {"union", r.union_},
          {"diff_a_minus_b", r.diff_a_minus_b},
          {"diff_b_minus_a", r.diff_b_minus_a},
          {"jaccard", rational_json(r.jaccard)},
          {"containment_a_in_b", rational_json(r.containment_a_in_b)},
          {"containment_b_in_a", rational_json(r.containment_b_in_a)}};
}

json envelope(std::string_view kind) {
  return {{"schema_version", kSchemaVersion}, {"kind", kind}};
}

void emit_json(std::ostream& out, const json& doc) { out << doc.dump(2) << '\n'; }

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> paths;
  std::string id;
  std::string mode = "operand_class";
  std::string policy = "mov_only";
  int iterations = 3;
  bool no_call_split = false;
  bool keep_going = false;
};

int cmd_ingest(const Config& cfg, const IngestArgs& a, std::ostream& out, std::ostream& err) {
  if (!a.id.empty() && a.paths.size() != 1) throw UsageError("--id requires exactly one path");
  IngestParams params;
  params.mode = *parse_label_mode(a.mode);
  params.policy = *parse_policy(a.policy);
  params.wl.iterations = a.iterations;
  params.segment.call_terminates_block = !a.no_call_split;

  Corpus corpus(cfg.corpus);
  json rows = json::array();
  int status = kOk;
  for (const auto& path : a.paths) {
    std::string id = a.id.empty() ? std::filesystem::path(path).stem().string() : a.id;
    try {
      ExtractResult r = corpus.ingest(path, id, params);
      const auto& d = r.diagnostics;
      if (cfg.format == Format::json) {
        rows.push_back({{"program_id", id},
                        {"file", corpus.feature_path(id).string()},
                        {"functions", d.parse.functions},
                        {"instructions", d.parse.instructions},
                        {"skipped_lines", d.parse.skipped_lines},
                        {"malformed_lines", d.parse.malformed.size()},
                        {"blocks", d.blocks},
                        {"empty_ddgs", d.empty_ddgs},
                        {"distinct_hashes", d.distinct_hashes},
                        {"external_edges", d.external_edges},
                        {"dangling_targets", d.dangling_targets},
                        {"indirect_jumps", d.indirect_jumps}});
      } else {
        out << id << ": " << d.parse.functions << " functions, " << d.parse.instructions
            << " instructions, " << d.blocks << " blocks, " << d.empty_ddgs << " empty DDGs, "
            << d.distinct_hashes << " distinct hashes (dedup ratio " << std::fixed
            << std::setprecision(3) << d.dedup_ratio() << ")";
        if (!d.parse.malformed.empty()) out << ", " << d.parse.malformed.size() << " malformed lines";
        out << "\n";
      }
    } catch (const std::exception& e) {
      err << "ddghash: " << path << ": " << e.what() << "\n";
      status = kFailure;
      if (!a.keep_going) break;
    }
  }
  if (cfg.format == Format::json) {
    json doc = envelope("ingest");
    doc["files"] = std::move(rows);
    emit_json(out, doc);
  }
  return status;
}

void print_report_text(std::ostream& out, const SimilarityReport& r) {
  auto ratio = [](const Rational& q) { return q.fraction() + " = " + q.decimal(3); };
  out << "a: " << r.a_id << " (" << r.size_a << " hashes)\n"
      << "b: " << r.b_id << " (" << r.size_b << " hashes)\n"
      << "intersection: " << r.intersection << "\n"
      << "a minus b: " << r.diff_a_minus_b << "\n"
      << "b minus a: " << r.diff_b_minus_a << "\n"
      << "union: " << r.union_ << "\n"
      << "jaccard: " << ratio(r.jaccard) << "\n"
      << "containment a in b: " << ratio(r.containment_a_in_b) << "\n"
      << "containment b in a: " << ratio(r.containment_b_in_a) << "\n";
}

int cmd_compare(const Config& cfg, const std::string& a, const std::string& b, std::ostream& out) {
  Corpus corpus(cfg.corpus);
  SimilarityReport r = compare(corpus.load(a).features, corpus.load(b).features);
  switch (cfg.format) {
    case Format::text:
      print_report_text(out, r);
      break;
    case Format::json: {
      json doc = envelope("compare");
      doc["report"] = report_json(r);
      emit_json(out, doc);
      break;
    }
    case Format::csv:
      out << "a_id,b_id,size_a,size_b,intersection,union,diff_a_minus_b,diff_b_minus_a,jaccard,"
             "containment_a_in_b,containment_b_in_a\n"
          << r.a_id << ',' << r.b_id << ',' << r.size_a << ',' << r.size_b << ','
          << r.intersection << ',' << r.union_ << ',' << r.diff_a_minus_b << ','
          << r.diff_b_minus_a << ',' << r.jaccard.decimal(3) << ','
          << r.containment_a_in_b.decimal(3) << ',' << r.containment_b_in_a.decimal(3) << "\n";
      break;
  }
  return kOk;
}

struct MatrixArgs {
  std::vector<std::string> ids;
  bool all = false;
  bool stats = false;
  std::string query;
  std::string histogram;
};

constexpr int kHistogramBins = 10;

void write_histogram(const std::string& path, const std::vector<Rational>& values) {
  std::vector<std::size_t> counts(kHistogramBins, 0);
  for (const auto& v : values) {
    // bin = floor(v * bins), with 1.0 in the last bin
    auto bin = static_cast<std::size_t>(
        static_cast<unsigned __int128>(v.num()) * kHistogramBins / v.den());
    counts[std::min<std::size_t>(bin, kHistogramBins - 1)] += 1;
  }
  std::ostringstream csv;
  csv << "bin_low,bin_high,count\n";
  for (int i = 0; i < kHistogramBins; ++i) {
    csv << Rational(i, kHistogramBins).decimal(1) << ',' << Rational(i + 1, kHistogramBins).decimal(1)
        << ',' << counts[i] << "\n";
  }
  write_file_atomic(path, csv.str());
}

int cmd_matrix(const Config& cfg, MatrixArgs a, std::ostream& out) {
  Corpus corpus(cfg.corpus);
  if (a.all) {
    if (!a.ids.empty()) throw UsageError("--all cannot be combined with explicit ids");
    a.ids = corpus.ids();
  } else if (a.ids.empty()) {
    throw UsageError("matrix needs program ids or --all");
  }
  if (!a.query.empty() && std::find(a.ids.begin(), a.ids.end(), a.query) == a.ids.end()) {
    a.ids.insert(a.ids.begin(), a.query);
  }
  for (const auto& id : a.ids) {
    if (!corpus.contains(id)) throw UnknownProgram(id);
  }
  if (a.ids.size() < 2) throw Error("matrix needs at least two programs");
  if (!a.histogram.empty()) a.stats = true;

  auto matrix = corpus.pairwise_matrix(a.ids);
  const std::size_t n = a.ids.size();

  if (a.stats) {
    std::vector<Rational> values;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (a.query.empty() || a.ids[i] == a.query || a.ids[j] == a.query) {
          values.push_back(matrix[i][j].jaccard);
        }
      }
    }
    JaccardStats s = jaccard_stats(values);
    if (!a.histogram.empty()) write_histogram(a.histogram, values);
    switch (cfg.format) {
      case Format::text:
        out << "pairs: " << s.count << "\nmin: " << s.min.decimal(3)
            << "\nmedian: " << s.median.decimal(3) << "\nmax: " << s.max.decimal(3) << "\n";
        break;
      case Format::csv:
        out << "pairs,min,median,max\n"
            << s.count << ',' << s.min.decimal(3) << ',' << s.median.decimal(3) << ','
            << s.max.decimal(3) << "\n";
        break;
      case Format::json: {
        json doc = envelope("matrix_stats");
        doc["pairs"] = s.count;
        doc["min"] = rational_json(s.min);
        doc["median"] = rational_json(s.median);
        doc["max"] = rational_json(s.max);
        if (!a.query.empty()) doc["query"] = a.query;
        emit_json(out, doc);
        break;
      }
    }
    return kOk;
  }

  switch (cfg.format) {
    case Format::csv:
      out << "id";
      for (const auto& id : a.ids) out << ',' << id;
      out << "\n";
      for (std::size_t i = 0; i < n; ++i) {
        out << a.ids[i];
        for (std::size_t j = 0; j < n; ++j) out << ',' << matrix[i][j].jaccard.decimal(3);
        out << "\n";
      }
      break;
    case Format::text: {
      std::size_t width = 5;
      for (const auto& id : a.ids) width = std::max(width, id.size());
      out << std::setw(static_cast<int>(width)) << "";
      for (const auto& id : a.ids) out << "  " << std::setw(static_cast<int>(width)) << id;
      out << "\n";
      for (std::size_t i = 0; i < n; ++i) {
        out << std::left << std::setw(static_cast<int>(width)) << a.ids[i] << std::right;
        for (std::size_t j = 0; j < n; ++j) {
          out << "  " << std::setw(static_cast<int>(width)) << matrix[i][j].jaccard.decimal(3);
        }
        out << "\n";
      }
      break;
    }
    case Format::json: {
      json doc = envelope("matrix");
      doc["ids"] = a.ids;
      json rows = json::array();
      for (const auto& row : matrix) {
        json r = json::array();
        for (const auto& cell : row) r.push_back(report_json(cell));
        rows.push_back(std::move(r));
      }
      doc["reports"] = std::move(rows);
      emit_json(out, doc);
      break;
    }
  }
  return kOk;
}

int cmd_nearest(const Config& cfg, const std::string& id, std::size_t k, std::ostream& out) {
  Corpus corpus(cfg.corpus);
  auto ranked = corpus.nearest(id, k);
  switch (cfg.format) {
    case Format::text:
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        out << i + 1 << ". " << ranked[i].b_id << "  jaccard " << ranked[i].jaccard.decimal(3)
            << "  containment " << ranked[i].containment_b_in_a.decimal(3) << "\n";
      }
      break;
    case Format::csv:
      out << "rank,id,jaccard,containment\n";
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        out << i + 1 << ',' << ranked[i].b_id << ',' << ranked[i].jaccard.decimal(3) << ','
            << ranked[i].containment_b_in_a.decimal(3) << "\n";
      }
      break;
    case Format::json: {
      json doc = envelope("nearest");
      doc["query"] = id;
      json rows = json::array();
      for (const auto& r : ranked) rows.push_back(report_json(r));
      doc["results"] = std::move(rows);
      emit_json(out, doc);
      break;
    }
  }
  return kOk;
}

int cmd_contain(const Config& cfg, const std::string& threshold_text, std::ostream& out) {
  Rational threshold;
  try {
    threshold = Rational::parse(threshold_text);
  } catch (const std::exception&) {
    throw UsageError("invalid --threshold: " + threshold_text);
  }
  if (threshold == Rational(0, 1) || threshold > Rational(1, 1)) {
    throw UsageError("--threshold must be in (0, 1]");
  }
  Corpus corpus(cfg.corpus);
  auto rows = corpus.find_containments(threshold);
  switch (cfg.format) {
    case Format::text:
      for (const auto& c : rows) {
        out << c.inner << " in " << c.outer << "  containment " << c.containment.decimal(3)
            << "\n";
      }
      break;
    case Format::csv:
      out << "inner,outer,containment\n";
      for (const auto& c : rows) {
        out << c.inner << ',' << c.outer << ',' << c.containment.decimal(3) << "\n";
      }
      break;
    case Format::json: {
      json doc = envelope("contain");
      doc["threshold"] = rational_json(threshold);
      json list = json::array();
      for (const auto& c : rows) {
        list.push_back(
            {{"inner", c.inner}, {"outer", c.outer}, {"containment", rational_json(c.containment)}});
      }
      doc["containments"] = std::move(list);
      emit_json(out, doc);
      break;
    }
  }
  return kOk;
}

int cmd_tfstats(const Config& cfg, const std::string& id, bool vectors, std::ostream& out) {
  Corpus corpus(cfg.corpus);
  FeatureFile file = corpus.load(id);
  if (file.term_vectors.empty()) throw Error("program '" + id + "' has no basic blocks");
  const TermDictionary& dict = TermDictionary::builtin();
  TermDistribution dist = term_distribution(file.term_vectors, dict);

  std::vector<TermWeights> weights;
  if (vectors) {
    CorpusIdf weights_idf = idf(file.term_vectors);
    for (const auto& tf : file.term_vectors) weights.push_back(tfidf_weights(tf, weights_idf));
  }

  switch (cfg.format) {
    case Format::csv:
      if (vectors) {
        write_weights_csv(out, dict, weights);
      } else {
        out << "stem,count,share\n";
        for (const auto& [stem, count] : dist.totals) {
          out << stem << ',' << count << ',' << Rational(count, std::max<std::uint64_t>(dist.total, 1)).decimal(3)
              << "\n";
        }
      }
      break;
    case Format::text:
      out << "instructions: " << dist.total << "\n"
          << "modal stem: " << dist.modal_stem << " (share " << dist.modal_share.decimal(3)
          << ")\n";
      for (const auto& [stem, count] : dist.totals) {
        if (count == 0) continue;
        out << "  " << std::left << std::setw(8) << stem << std::right << std::setw(10) << count
            << "  " << Rational(count, dist.total).decimal(3) << "\n";
      }
      if (vectors) {
        out << "\n";
        write_weights_csv(out, dict, weights);
      }
      break;
    case Format::json: {
      json doc = envelope("tfstats");
      doc["program_id"] = id;
      doc["instructions"] = dist.total;
      doc["modal_stem"] = dist.modal_stem;
      doc["modal_share"] = rational_json(dist.modal_share);
      json totals = json::array();
      for (const auto& [stem, count] : dist.totals) totals.push_back({{"stem", stem}, {"count", count}});
      doc["totals"] = std::move(totals);
      if (vectors) {
        doc["stems"] = dict.stems();
        doc["vectors"] = weights;
      }
      emit_json(out, doc);
      break;
    }
  }
  return kOk;
}

int cmd_parse(const Config& cfg, const std::string& path, std::ostream& out) {
  ParsedListing listing = parse_listing(read_file(path));
  const ParseReport& r = listing.report;
  if (cfg.format == Format::json) {
    json doc = envelope("parse");
    doc["syntax"] = to_string(listing.syntax);
    doc["functions"] = r.functions;
    doc["instructions"] = r.instructions;
    doc["instruction_lines"] = r.instruction_lines;
    doc["skipped_lines"] = r.skipped_lines;
    json bad = json::array();
    for (const auto& m : r.malformed) bad.push_back({{"line", m.line_no}, {"reason", m.reason}});
    doc["malformed"] = std::move(bad);
    emit_json(out, doc);
    return kOk;
  }
  out << "syntax: " << to_string(listing.syntax) << "\n"
      << "functions: " << r.functions << "\n"
      << "instructions: " << r.instructions << "\n"
      << "skipped lines: " << r.skipped_lines << "\n"
      << "malformed lines: " << r.malformed.size() << "\n";
  for (const auto& m : r.malformed) out << "  line " << m.line_no << ": " << m.reason << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Data dependency graph hashing for program similarity", "ddghash"};
  app.require_subcommand(1);

  Config cfg;
  const char* env = std::getenv("DDGHASH_CORPUS");
  if (env && *env) cfg.corpus = env;
  std::map<std::string, Format> formats{
      {"text", Format::text}, {"json", Format::json}, {"csv", Format::csv}};
  app.add_option("--corpus", cfg.corpus, "Corpus directory (default: $DDGHASH_CORPUS or .)");
  app.add_option("--format", cfg.format, "Output format")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));

  IngestArgs ingest;
  auto* sub_ingest = app.add_subcommand("ingest", "Extract features from disassembly listings");
  sub_ingest->add_option("paths", ingest.paths, "objdump listings")->required();
  sub_ingest->add_option("--id", ingest.id, "Program id (single path only)");
  sub_ingest->add_option("--mode", ingest.mode, "DDG node labels")
      ->check(CLI::IsMember({"unlabeled", "operand_class", "literal"}));
  sub_ingest->add_option("--policy", ingest.policy, "Instructions contributing DDG edges")
      ->check(CLI::IsMember({"mov_only", "all_data_operands"}));
  sub_ingest->add_option("--iters", ingest.iterations, "WL refinement rounds")
      ->check(CLI::Range(1, 64));
  sub_ingest->add_flag("--no-call-split", ingest.no_call_split, "Do not end blocks at calls");
  sub_ingest->add_flag("--keep-going", ingest.keep_going, "Continue after a failed file");

  std::string cmp_a, cmp_b;
  auto* sub_compare = app.add_subcommand("compare", "Compare two programs");
  sub_compare->add_option("a", cmp_a)->required();
  sub_compare->add_option("b", cmp_b)->required();

  MatrixArgs matrix;
  auto* sub_matrix = app.add_subcommand("matrix", "Pairwise Jaccard matrix");
  sub_matrix->add_option("ids", matrix.ids, "Program ids");
  sub_matrix->add_flag("--all", matrix.all, "Use every program in the corpus");
  sub_matrix->add_flag("--stats", matrix.stats, "Print min/median/max Jaccard over pairs");
  sub_matrix->add_option("--query", matrix.query, "Restrict statistics to pairs with this id");
  sub_matrix->add_option("--histogram", matrix.histogram, "Write a Jaccard histogram CSV");

  std::string nearest_id;
  std::size_t k = 5;
  auto* sub_nearest = app.add_subcommand("nearest", "Most similar programs");
  sub_nearest->add_option("id", nearest_id)->required();
  sub_nearest->add_option("-k", k, "Number of results")->check(CLI::PositiveNumber);

  std::string threshold = "1.0";
  auto* sub_contain = app.add_subcommand("contain", "Find programs contained in others");
  sub_contain->add_option("--threshold", threshold, "Minimum containment in (0, 1]");

  std::string tf_id;
  bool tf_vectors = false;
  auto* sub_tf = app.add_subcommand("tfstats", "Stemmed opcode distribution");
  sub_tf->add_option("id", tf_id)->required();
  sub_tf->add_flag("--vectors", tf_vectors, "Print per-block tf-idf vectors");

  std::string parse_path;
  auto* sub_parse = app.add_subcommand("parse", "Parse a listing and print the parse report");
  sub_parse->add_option("path", parse_path)->required();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (sub_ingest->parsed()) return cmd_ingest(cfg, ingest, out, err);
    if (sub_compare->parsed()) return cmd_compare(cfg, cmp_a, cmp_b, out);
    if (sub_matrix->parsed()) return cmd_matrix(cfg, matrix, out);
    if (sub_nearest->parsed()) return cmd_nearest(cfg, nearest_id, k, out);
    if (sub_contain->parsed()) return cmd_contain(cfg, threshold, out);
    if (sub_tf->parsed()) return cmd_tfstats(cfg, tf_id, tf_vectors, out);
    if (sub_parse->parsed()) return cmd_parse(cfg, parse_path, out);
  } catch (const UsageError& e) {
    err << "ddghash: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "ddghash: error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace ddghash::cli
