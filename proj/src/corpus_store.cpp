#include "ddghash/corpus_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ddghash/errors.hpp"

namespace ddghash {

using nlohmann::json;

namespace {

json metadata_to_json(const FeatureMetadata& m, const std::string& dictionary_version) {
  return json{{"call_terminates_block", m.call_terminates_block},
              {"dictionary_version", dictionary_version},
              {"digest", "blake2b-128"},
              {"digest_bits", m.wl.digest_bits},
              {"label_mode", std::string(to_string(m.mode))},
              {"policy", std::string(to_string(m.policy))},
              {"toolkit_version", m.toolkit_version},
              {"wl_iterations", m.wl.iterations}};
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string("feature file: missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("feature file: bad field '") + key + "': " + e.what());
  }
}

WlHash hash_from_json(const json& j) {
  auto h = WlHash::from_hex(j.get<std::string>());
  if (!h || h->hex() != j.get<std::string>()) {
    throw FormatError("feature file: invalid hash '" + j.get<std::string>() + "'");
  }
  return *h;
}

}  // namespace

std::string serialize(const FeatureFile& file) {
  const ProgramFeatureSet& fs = file.features;
  json block_map = json::array();
  for (const auto& [block, hash] : fs.block_map) block_map.push_back({block, hash.hex()});
  json hashes = json::array();
  for (const auto& h : fs.hashes) hashes.push_back(h.hex());
  json edges = json::array();
  for (auto [a, b] : fs.order_edges) edges.push_back({a, b});
  json terms = json::array();
  for (const auto& tf : file.term_vectors) terms.push_back({tf.block_id, tf.counts});

  json doc{{"block_map", std::move(block_map)},
           {"diagnostics",
            {{"blocks", fs.diagnostics.blocks}, {"empty_ddgs", fs.diagnostics.empty_ddgs}}},
           {"format", "ddghash-features"},
           {"format_version", kFeatureFormatVersion},
           {"hashes", std::move(hashes)},
           {"metadata", metadata_to_json(fs.metadata, file.dictionary_version)},
           {"order_edges", std::move(edges)},
           {"program_id", fs.program_id},
           {"source_digest", file.source_digest},
           {"term_vectors", std::move(terms)}};
  return doc.dump(1) + "\n";
}

namespace {

FeatureFile deserialize_document(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("feature file: invalid JSON: ") + e.what());
  }
  if (field<std::string>(doc, "format") != "ddghash-features") {
    throw FormatError("feature file: not a ddghash feature document");
  }
  if (int v = field<int>(doc, "format_version"); v != kFeatureFormatVersion) {
    throw FormatError("feature file: unsupported format version " + std::to_string(v));
  }

  FeatureFile file;
  ProgramFeatureSet& fs = file.features;
  fs.program_id = field<std::string>(doc, "program_id");
  file.source_digest = field<std::string>(doc, "source_digest");

  const json& meta = doc.at("metadata");
  auto mode = parse_label_mode(field<std::string>(meta, "label_mode"));
  auto policy = parse_policy(field<std::string>(meta, "policy"));
  if (!mode || !policy) throw FormatError("feature file: unknown label mode or policy");
  fs.metadata.mode = *mode;
  fs.metadata.policy = *policy;
  fs.metadata.wl.iterations = field<int>(meta, "wl_iterations");
  fs.metadata.wl.digest_bits = field<int>(meta, "digest_bits");
  fs.metadata.call_terminates_block = field<bool>(meta, "call_terminates_block");
  fs.metadata.toolkit_version = field<std::string>(meta, "toolkit_version");
  file.dictionary_version = field<std::string>(meta, "dictionary_version");

  const json& diag = doc.at("diagnostics");
  fs.diagnostics.blocks = field<std::size_t>(diag, "blocks");
  fs.diagnostics.empty_ddgs = field<std::size_t>(diag, "empty_ddgs");

  try {
    for (const auto& entry : doc.at("block_map")) {
      auto block = entry.at(0).get<std::size_t>();
      if (block >= fs.diagnostics.blocks) throw FormatError("feature file: block index out of range");
      if (!fs.block_map.emplace(block, hash_from_json(entry.at(1))).second) {
        throw FormatError("feature file: duplicate block index");
      }
    }
    for (const auto& h : doc.at("hashes")) fs.hashes.push_back(hash_from_json(h));
    for (const auto& e : doc.at("order_edges")) {
      auto a = e.at(0).get<std::size_t>();
      auto b = e.at(1).get<std::size_t>();
      if (a >= fs.diagnostics.blocks || b >= fs.diagnostics.blocks) {
        throw FormatError("feature file: order edge endpoint out of range");
      }
      fs.order_edges.emplace_back(a, b);
    }
    for (const auto& t : doc.at("term_vectors")) {
      TermFrequencyVector tf;
      tf.block_id = t.at(0).get<std::size_t>();
      tf.counts = t.at(1).get<TermCounts>();
      for (auto c : tf.counts) tf.total += c;
      file.term_vectors.push_back(tf);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("feature file: ") + e.what());
  }

  ProgramFeatureSet check = fs;
  refresh_hash_set(check);
  if (check.hashes != fs.hashes) {
    throw FormatError("feature file: hash set does not match the block map");
  }
  if (!std::is_sorted(fs.order_edges.begin(), fs.order_edges.end()) ||
      std::adjacent_find(fs.order_edges.begin(), fs.order_edges.end()) != fs.order_edges.end()) {
    throw FormatError("feature file: order edges not sorted and unique");
  }
  return file;
}

}  // namespace

FeatureFile deserialize(std::string_view text) {
  try {
    return deserialize_document(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("feature file: ") + e.what());
  }
}

double IngestDiagnostics::dedup_ratio() const {
  std::size_t hashed = blocks - empty_ddgs;
  return hashed == 0 ? 0.0 : static_cast<double>(distinct_hashes) / static_cast<double>(hashed);
}

ExtractResult extract_features(std::string_view disassembly, std::string program_id,
                               const IngestParams& params) {
  ExtractResult result;
  ParsedListing listing = parse_listing(disassembly);
  IngestDiagnostics& diag = result.diagnostics;
  diag.parse = listing.report;

  const TermDictionary& dict = TermDictionary::builtin();
  std::vector<DataDependencyGraph> ddgs;
  std::vector<CfgEdge> edges;
  std::size_t next_id = 0;
  for (const auto& fn : listing.functions) {
    auto blocks = segment(fn, next_id, params.segment);
    next_id += blocks.size();
    ControlFlowGraph cfg = build_cfg(blocks, params.segment);
    edges.insert(edges.end(), cfg.edges.begin(), cfg.edges.end());
    diag.external_edges += cfg.external.size();
    diag.dangling_targets += cfg.dangling_targets.size();
    diag.indirect_jumps += cfg.indirect_jumps;
    for (const auto& block : blocks) {
      ddgs.push_back(build_ddg(block, params.policy, params.mode));
      result.file.term_vectors.push_back(tf_vector(block, dict));
    }
  }

  FeatureMetadata meta;
  meta.mode = params.mode;
  meta.policy = params.policy;
  meta.wl = params.wl;
  meta.call_terminates_block = params.segment.call_terminates_block;
  result.file.features = make_feature_set(std::move(program_id), next_id, ddgs, edges, meta);
  result.file.source_digest = digest128(disassembly).hex();
  result.file.dictionary_version = dict.version();

  diag.blocks = next_id;
  diag.empty_ddgs = result.file.features.diagnostics.empty_ddgs;
  diag.distinct_hashes = result.file.features.hashes.size();
  return result;
}

bool valid_program_id(std::string_view id) {
  return !id.empty() && id != "." && id != ".." && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
  });
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Corpus::Corpus(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path Corpus::feature_path(std::string_view id) const {
  return dir_ / (std::string(id) + std::string(kFeatureSuffix));
}

ExtractResult Corpus::ingest(const std::filesystem::path& disassembly,
                             const std::string& program_id, const IngestParams& params) {
  if (!valid_program_id(program_id)) throw Error("invalid program id: '" + program_id + "'");
  std::string text = read_file(disassembly);
  ExtractResult result = extract_features(text, program_id, params);
  add(result.file);
  return result;
}

void Corpus::add(const FeatureFile& file) {
  const std::string& id = file.features.program_id;
  if (!valid_program_id(id)) throw Error("invalid program id: '" + id + "'");
  std::filesystem::create_directories(dir_);
  std::string bytes = serialize(file);
  auto path = feature_path(id);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec) || read_file(path) != bytes) {
    write_file_atomic(path, bytes);
  }
  write_index();
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir_, ec)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || !name.ends_with(kFeatureSuffix)) continue;
    std::string id = name.substr(0, name.size() - kFeatureSuffix.size());
    if (valid_program_id(id)) out.push_back(std::move(id));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Corpus::contains(std::string_view id) const {
  std::error_code ec;
  return valid_program_id(id) && std::filesystem::is_regular_file(feature_path(id), ec);
}

FeatureFile Corpus::load(std::string_view id) const {
  if (!contains(id)) throw UnknownProgram(std::string(id));
  FeatureFile file = deserialize(read_file(feature_path(id)));
  if (file.features.program_id != id) {
    throw FormatError("feature file " + feature_path(id).string() + " holds program '" +
                      file.features.program_id + "'");
  }
  return file;
}

CorpusIndex Corpus::build_index() const {
  CorpusIndex index;
  for (const auto& id : ids()) {
    FeatureFile file = load(id);
    index.programs[id] = {feature_path(id).filename().string(), file.features.hashes.size()};
    for (const auto& h : file.features.hashes) index.inverted[h].push_back(id);
  }
  return index;
}

void Corpus::write_index() const {
  CorpusIndex index = build_index();
  json programs = json::object();
  for (const auto& [id, entry] : index.programs) {
    programs[id] = {{"file", entry.file}, {"hash_count", entry.hash_count}};
  }
  json inverted = json::object();
  for (const auto& [hash, ids] : index.inverted) inverted[hash.hex()] = ids;
  json doc{{"format", "ddghash-index"},
           {"format_version", kIndexFormatVersion},
           {"inverted", std::move(inverted)},
           {"programs", std::move(programs)}};
  std::string bytes = doc.dump(1) + "\n";
  auto path = dir_ / "index.json";
  std::error_code ec;
  if (!std::filesystem::exists(path, ec) || read_file(path) != bytes) write_file_atomic(path, bytes);
}

CorpusIndex Corpus::read_index() const {
  CorpusIndex index;
  try {
    json doc = json::parse(read_file(dir_ / "index.json"));
    if (doc.at("format_version").get<int>() != kIndexFormatVersion) {
      throw FormatError("index.json: unsupported format version");
    }
    for (const auto& [id, entry] : doc.at("programs").items()) {
      index.programs[id] = {entry.at("file").get<std::string>(),
                            entry.at("hash_count").get<std::size_t>()};
    }
    for (const auto& [hex, ids] : doc.at("inverted").items()) {
      auto h = WlHash::from_hex(hex);
      if (!h) throw FormatError("index.json: invalid hash");
      index.inverted[*h] = ids.get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("index.json: ") + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(e.what());
  }
  return index;
}

std::vector<ProgramFeatureSet> Corpus::load_all(const std::vector<std::string>& ids) const {
  std::vector<ProgramFeatureSet> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(load(id).features);
  return out;
}

std::vector<std::vector<SimilarityReport>> Corpus::pairwise_matrix(
    const std::vector<std::string>& ids) const {
  auto sets = load_all(ids);
  const std::size_t n = sets.size();
  std::vector<std::vector<SimilarityReport>> matrix(n, std::vector<SimilarityReport>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      matrix[i][j] = compare(sets[i], sets[j]);
      if (i == j) continue;
      SimilarityReport& mirror = matrix[j][i];
      const SimilarityReport& r = matrix[i][j];
      mirror = r;
      std::swap(mirror.a_id, mirror.b_id);
      std::swap(mirror.size_a, mirror.size_b);
      std::swap(mirror.diff_a_minus_b, mirror.diff_b_minus_a);
      std::swap(mirror.containment_a_in_b, mirror.containment_b_in_a);
    }
  }
  return matrix;
}

std::vector<SimilarityReport> Corpus::nearest(std::string_view query_id, std::size_t k) const {
  ProgramFeatureSet query = load(query_id).features;
  std::vector<SimilarityReport> out;
  for (const auto& id : ids()) {
    if (id == query_id) continue;
    out.push_back(compare(query, load(id).features));
  }
  std::sort(out.begin(), out.end(), [](const SimilarityReport& a, const SimilarityReport& b) {
    if (a.jaccard != b.jaccard) return a.jaccard > b.jaccard;
    if (a.containment_b_in_a != b.containment_b_in_a) {
      return a.containment_b_in_a > b.containment_b_in_a;
    }
    return a.b_id < b.b_id;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

std::vector<Containment> Corpus::find_containments(const Rational& threshold) const {
  if (threshold == Rational(0, 1) || threshold > Rational(1, 1)) {
    throw std::invalid_argument("containment threshold must be in (0, 1]");
  }
  auto all = ids();
  auto sets = load_all(all);
  std::vector<Containment> out;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = 0; j < sets.size(); ++j) {
      if (i == j) continue;
      SimilarityReport r = compare(sets[i], sets[j]);
      if (r.size_a > 0 && r.containment_a_in_b >= threshold) {
        out.push_back({all[i], all[j], r.containment_a_in_b});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Containment& a, const Containment& b) {
    if (a.containment != b.containment) return a.containment > b.containment;
    if (a.inner != b.inner) return a.inner < b.inner;
    return a.outer < b.outer;
  });
  return out;
}

}  // namespace ddghash
