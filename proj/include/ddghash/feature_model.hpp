#pragma once

// A program as a deduplicated set of WL hashes, with the CFG-induced partial
// order over blocks, and the set algebra used to compare programs.

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ddghash/block_segmenter.hpp"
#include "ddghash/ddg_builder.hpp"
#include "ddghash/wl_hash.hpp"

namespace ddghash {

inline constexpr const char* kToolkitVersion = "1.0.0";

// Exact non-negative rational, kept in lowest terms.
class Rational {
 public:
  Rational() = default;
  Rational(std::uint64_t num, std::uint64_t den);

  // Parses "0.204", "1", "3/4". Throws std::invalid_argument.
  static Rational parse(std::string_view text);

  std::uint64_t num() const { return num_; }
  std::uint64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  // Rounded half-up to a fixed number of decimal places: "0.152".
  std::string decimal(int places = 3) const;
  // "113/743"
  std::string fraction() const;

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  static Rational midpoint(const Rational& a, const Rational& b);

 private:
  std::uint64_t num_ = 0;
  std::uint64_t den_ = 1;
};

struct FeatureMetadata {
  LabelMode mode = LabelMode::operand_class;
  InstructionFamilyPolicy policy = InstructionFamilyPolicy::mov_only;
  WLParams wl;
  bool call_terminates_block = true;
  std::string toolkit_version = kToolkitVersion;

  // Hash sets are comparable only when these settings agree.
  bool compatible_with(const FeatureMetadata& other) const {
    return mode == other.mode && policy == other.policy && wl == other.wl &&
           call_terminates_block == other.call_terminates_block;
  }
  bool operator==(const FeatureMetadata&) const = default;
};

struct FeatureDiagnostics {
  std::size_t blocks = 0;
  std::size_t empty_ddgs = 0;

  bool operator==(const FeatureDiagnostics&) const = default;
};

struct ProgramFeatureSet {
  std::string program_id;
  std::vector<WlHash> hashes;                // sorted, distinct values of block_map
  std::map<std::size_t, WlHash> block_map;  // block index -> hash; empty DDGs omitted
  std::vector<std::pair<std::size_t, std::size_t>> order_edges;  // sorted, unique
  FeatureMetadata metadata;
  FeatureDiagnostics diagnostics;

  bool operator==(const ProgramFeatureSet&) const = default;
};

struct SimilarityReport {
  std::string a_id;
  std::string b_id;
  std::uint64_t size_a = 0;
  std::uint64_t size_b = 0;
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
  std::uint64_t diff_a_minus_b = 0;
  std::uint64_t diff_b_minus_a = 0;
  Rational jaccard;
  Rational containment_a_in_b;  // |A ∩ B| / |A|
  Rational containment_b_in_a;  // |A ∩ B| / |B|
};

// Hashes every non-empty DDG, deduplicates, and copies the CFG edges.
// ddgs[i] belongs to the block with index ddgs[i].block_id.
ProgramFeatureSet make_feature_set(std::string program_id, std::size_t block_count,
                                   const std::vector<DataDependencyGraph>& ddgs,
                                   const std::vector<CfgEdge>& cfg_edges,
                                   const FeatureMetadata& metadata);

// Recomputes hashes from block_map (used when building sets directly).
void refresh_hash_set(ProgramFeatureSet& fs);

// Throws IncompatibleCorpora.
SimilarityReport compare(const ProgramFeatureSet& a, const ProgramFeatureSet& b);
std::vector<WlHash> set_difference(const ProgramFeatureSet& a, const ProgramFeatureSet& b);
std::vector<WlHash> set_intersection(const ProgramFeatureSet& a, const ProgramFeatureSet& b);
std::vector<WlHash> set_union(const ProgramFeatureSet& a, const ProgramFeatureSet& b);

// Counts-only report over two sorted hash sets.
SimilarityReport compare_sets(const std::vector<WlHash>& a, const std::vector<WlHash>& b);

struct PosetExport {
  std::vector<std::pair<WlHash, WlHash>> edges;  // sorted, unique
  std::size_t self_pairs = 0;      // edges whose endpoints share a hash
  std::size_t skipped_edges = 0;   // an endpoint block had an empty DDG
};

PosetExport export_poset(const ProgramFeatureSet& fs);

struct JaccardStats {
  Rational min;
  Rational median;
  Rational max;
  std::size_t count = 0;
};

// Throws std::invalid_argument on an empty input.
JaccardStats jaccard_stats(std::vector<Rational> values);

}  // namespace ddghash
