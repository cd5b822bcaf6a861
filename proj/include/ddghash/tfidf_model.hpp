#pragma once

// Stemmed-opcode term frequency baseline.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ddghash/block_segmenter.hpp"
#include "ddghash/feature_model.hpp"

namespace ddghash {

inline constexpr std::size_t kStemCount = 32;
inline constexpr std::string_view kOtherStem = "other";

class TermDictionary {
 public:
  // Parses "pattern stem" lines; '#' starts a comment. Throws FormatError
  // unless the table yields exactly kStemCount stems including "other".
  static TermDictionary parse(std::string_view table);
  static TermDictionary load(const std::string& path);
  // The table shipped in data/stems.txt, compiled in.
  static const TermDictionary& builtin();

  const std::vector<std::string>& stems() const { return stems_; }
  const std::vector<std::pair<std::string, std::string>>& rules() const { return rules_; }
  // Content digest of the table (16 hex chars).
  const std::string& version() const { return version_; }

  // Longest-prefix match; "other" when nothing matches.
  const std::string& stem(std::string_view mnemonic) const;
  std::size_t index_of(std::string_view stem) const;

 private:
  std::vector<std::string> stems_;
  std::vector<std::pair<std::string, std::string>> rules_;
  std::unordered_map<std::string, std::size_t> pattern_to_stem_;
  std::unordered_map<std::string, std::size_t> stem_index_;
  std::string version_;
};

std::string_view builtin_stem_table();

using TermCounts = std::array<std::uint32_t, kStemCount>;
using TermWeights = std::array<double, kStemCount>;

struct TermFrequencyVector {
  std::size_t block_id = 0;
  TermCounts counts{};
  std::uint64_t total = 0;

  bool operator==(const TermFrequencyVector&) const = default;
};

struct CorpusIdf {
  std::size_t doc_count = 0;
  std::array<std::size_t, kStemCount> df{};
  TermWeights idf{};
};

TermFrequencyVector tf_vector(const BasicBlock& block,
                              const TermDictionary& dict = TermDictionary::builtin());

// Smoothed: idf = ln((1 + N) / (1 + df)) + 1. Throws EmptyCorpus.
CorpusIdf idf(std::span<const TermFrequencyVector> corpus);

TermWeights tfidf_weights(const TermFrequencyVector& tf, const CorpusIdf& idf);
TermWeights unweighted(const TermFrequencyVector& tf);

// Throws ZeroVector if either vector is all zeros.
double cosine_similarity(const TermWeights& u, const TermWeights& v);

struct TermDistribution {
  std::vector<std::pair<std::string, std::uint64_t>> totals;  // descending
  std::uint64_t total = 0;
  std::string modal_stem;
  Rational modal_share;
};

// Throws std::invalid_argument for an empty input.
TermDistribution term_distribution(std::span<const TermFrequencyVector> blocks,
                                   const TermDictionary& dict = TermDictionary::builtin());

// Header row of the 32 stems, then one row per vector.
void write_weights_csv(std::ostream& os, const TermDictionary& dict,
                       std::span<const TermWeights> rows);

}  // namespace ddghash
