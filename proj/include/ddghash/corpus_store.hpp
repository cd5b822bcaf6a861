#pragma once

// Feature files on disk and corpus-level similarity queries.
//
// A corpus is a directory holding one "<program_id>.features.json" per
// program plus a derived "index.json". Formats are described in
// docs/FORMATS.md.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ddghash/block_segmenter.hpp"
#include "ddghash/disasm_parser.hpp"
#include "ddghash/feature_model.hpp"
#include "ddghash/tfidf_model.hpp"

namespace ddghash {

inline constexpr int kFeatureFormatVersion = 1;
inline constexpr int kIndexFormatVersion = 1;
inline constexpr std::string_view kFeatureSuffix = ".features.json";

struct FeatureFile {
  ProgramFeatureSet features;
  std::string source_digest;
  std::string dictionary_version;
  std::vector<TermFrequencyVector> term_vectors;  // one per block, in block order

  bool operator==(const FeatureFile&) const = default;
};

// Deterministic JSON text (sorted keys, integers only, trailing newline).
std::string serialize(const FeatureFile& file);
// Throws FormatError.
FeatureFile deserialize(std::string_view text);

struct IngestParams {
  LabelMode mode = LabelMode::operand_class;
  InstructionFamilyPolicy policy = InstructionFamilyPolicy::mov_only;
  WLParams wl;
  SegmentOptions segment;
};

struct IngestDiagnostics {
  ParseReport parse;
  std::size_t blocks = 0;
  std::size_t empty_ddgs = 0;
  std::size_t distinct_hashes = 0;
  std::size_t external_edges = 0;
  std::size_t dangling_targets = 0;
  std::size_t indirect_jumps = 0;
  // distinct hashes / hashed blocks
  double dedup_ratio() const;
};

struct ExtractResult {
  FeatureFile file;
  IngestDiagnostics diagnostics;
};

// parse -> segment -> DDG -> WL hash -> feature set, all in memory.
ExtractResult extract_features(std::string_view disassembly, std::string program_id,
                               const IngestParams& params = {});

// Valid ids are non-empty and use only [A-Za-z0-9._-].
bool valid_program_id(std::string_view id);

struct CorpusIndex {
  struct Entry {
    std::string file;
    std::size_t hash_count = 0;
  };
  std::map<std::string, Entry> programs;
  std::map<WlHash, std::vector<std::string>> inverted;  // ids sorted
};

struct Containment {
  std::string inner;
  std::string outer;
  Rational containment;  // |inner ∩ outer| / |inner|
};

class Corpus {
 public:
  explicit Corpus(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path feature_path(std::string_view id) const;

  // Reads the listing, extracts features, writes the feature file and
  // refreshes the index. Nothing is written if any step fails.
  ExtractResult ingest(const std::filesystem::path& disassembly, const std::string& program_id,
                       const IngestParams& params = {});

  // Saves a feature file (unchanged bytes are not rewritten) and refreshes
  // the index.
  void add(const FeatureFile& file);

  std::vector<std::string> ids() const;
  bool contains(std::string_view id) const;
  // Throws UnknownProgram, FormatError.
  FeatureFile load(std::string_view id) const;

  CorpusIndex build_index() const;
  void write_index() const;
  // Throws FormatError when index.json is missing or malformed.
  CorpusIndex read_index() const;

  // Full matrix over ids (row a, column b). Throws IncompatibleCorpora.
  std::vector<std::vector<SimilarityReport>> pairwise_matrix(
      const std::vector<std::string>& ids) const;

  // Reports compare(query, member), ranked by jaccard, then by the member's
  // containment in the query, then by id. The query itself is excluded.
  std::vector<SimilarityReport> nearest(std::string_view query_id, std::size_t k) const;

  // Ordered pairs with containment of inner in outer >= threshold, sorted
  // by containment descending, then inner, then outer.
  std::vector<Containment> find_containments(const Rational& threshold) const;

 private:
  std::vector<ProgramFeatureSet> load_all(const std::vector<std::string>& ids) const;

  std::filesystem::path dir_;
};

// Writes bytes to path via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace ddghash
