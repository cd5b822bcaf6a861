#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "ddghash/errors.hpp"
#include "ddghash/tfidf_model.hpp"
#include "ddghash/corpus_store.hpp"
#include "fixtures.hpp"

namespace ddghash {
namespace {

const TermDictionary& dict() { return TermDictionary::builtin(); }

std::uint32_t count(const TermFrequencyVector& v, std::string_view stem) {
  return v.counts[dict().index_of(stem)];
}

BasicBlock reference_block() {
  return segment(parse_listing(fixtures::kReferenceBare).functions.at(0)).at(0);
}

TermFrequencyVector vector_of(std::initializer_list<std::pair<const char*, std::uint32_t>> c) {
  TermFrequencyVector v;
  for (auto [stem, n] : c) {
    v.counts[dict().index_of(stem)] = n;
    v.total += n;
  }
  return v;
}

TEST(Dictionary, BuiltinHasThirtyTwoStems) {
  const auto& stems = dict().stems();
  EXPECT_EQ(stems.size(), kStemCount);
  EXPECT_EQ(std::set<std::string>(stems.begin(), stems.end()).size(), kStemCount);
  EXPECT_NE(std::find(stems.begin(), stems.end(), "other"), stems.end());
  EXPECT_EQ(dict().version().size(), 16u);
}

TEST(Dictionary, RuleTableClosure) {
  std::set<std::string> produced;
  for (const auto& [pattern, stem] : dict().rules()) produced.insert(dict().stem(pattern));
  produced.insert(dict().stem("zzzunknown"));
  EXPECT_EQ(produced.size(), kStemCount);
}

TEST(Dictionary, Stemming) {
  EXPECT_EQ(dict().stem("cmovne"), "cmov");
  EXPECT_EQ(dict().stem("mov"), "mov");
  EXPECT_EQ(dict().stem("movzx"), "mov");
  EXPECT_EQ(dict().stem("movabs"), "mov");
  EXPECT_EQ(dict().stem("jmp"), "jmp");
  EXPECT_EQ(dict().stem("je"), "jcc");
  EXPECT_EQ(dict().stem("sete"), "setcc");
  EXPECT_EQ(dict().stem("xyzzy"), "other");
}

TEST(Dictionary, ParseRejectsWrongStemCount) {
  EXPECT_THROW(TermDictionary::parse("mov mov\nadd add\n"), FormatError);
}

TEST(Dictionary, ParseBuiltinTextRoundTrips) {
  TermDictionary d = TermDictionary::parse(builtin_stem_table());
  EXPECT_EQ(d.stems(), dict().stems());
  EXPECT_EQ(d.version(), dict().version());
}

TEST(TfVector, Reference) {
  auto v = tf_vector(reference_block());
  EXPECT_EQ(count(v, "mov"), 4u);
  EXPECT_EQ(count(v, "cmov"), 1u);
  EXPECT_EQ(count(v, "and"), 1u);
  EXPECT_EQ(count(v, "or"), 2u);
  EXPECT_EQ(count(v, "cmp"), 1u);
  EXPECT_EQ(count(v, "jmp"), 1u);
  EXPECT_EQ(v.total, 10u);
  std::uint64_t sum = 0;
  for (auto c : v.counts) sum += c;
  EXPECT_EQ(sum, 10u);
}

TEST(TfVector, UnknownMnemonics) {
  fixtures::ListingWriter w;
  w.function("f");
  for (const char* m : {"vfoo", "vbar", "vbaz"}) w.add(m);
  auto v = tf_vector(segment(parse_listing(w.str()).functions.at(0)).at(0));
  EXPECT_EQ(count(v, "other"), 3u);
  EXPECT_EQ(v.total, 3u);
}

TEST(Idf, SmoothedValues) {
  // N = 3; mov in all three, add in one, xor in none.
  std::vector<TermFrequencyVector> corpus = {vector_of({{"mov", 2}, {"add", 1}}),
                                             vector_of({{"mov", 1}}), vector_of({{"mov", 5}})};
  CorpusIdf w = idf(corpus);
  EXPECT_EQ(w.doc_count, 3u);
  EXPECT_EQ(w.df[dict().index_of("mov")], 3u);
  EXPECT_DOUBLE_EQ(w.idf[dict().index_of("mov")], 1.0);
  EXPECT_NEAR(w.idf[dict().index_of("add")], 1.6931471805599454, 1e-12);  // ln 2 + 1
  EXPECT_NEAR(w.idf[dict().index_of("xor")], 2.386294361119891, 1e-12);   // ln 4 + 1
  EXPECT_GT(w.idf[dict().index_of("add")], w.idf[dict().index_of("mov")]);
}

TEST(Idf, SingleDocumentIsOne) {
  std::vector<TermFrequencyVector> corpus = {vector_of({{"mov", 2}, {"add", 1}})};
  CorpusIdf w = idf(corpus);
  EXPECT_DOUBLE_EQ(w.idf[dict().index_of("mov")], 1.0);
  EXPECT_DOUBLE_EQ(w.idf[dict().index_of("add")], 1.0);
}

TEST(Idf, EmptyCorpusThrows) {
  std::vector<TermFrequencyVector> none;
  EXPECT_THROW(idf(none), EmptyCorpus);
}

TEST(Cosine, KnownValues) {
  auto u = unweighted(vector_of({{"mov", 1}, {"lea", 1}}));
  auto v = unweighted(vector_of({{"mov", 1}}));
  EXPECT_NEAR(cosine_similarity(u, v), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(cosine_similarity(u, u), 1.0, 1e-12);
  auto w = unweighted(vector_of({{"add", 3}}));
  EXPECT_EQ(cosine_similarity(v, w), 0.0);
  EXPECT_THROW(cosine_similarity(v, unweighted(TermFrequencyVector{})), ZeroVector);
}

TEST(Cosine, ScaleInvariant) {
  auto a = vector_of({{"mov", 3}, {"add", 1}, {"jcc", 2}});
  auto b = vector_of({{"mov", 1}, {"cmp", 4}});
  auto a5 = vector_of({{"mov", 15}, {"add", 5}, {"jcc", 10}});
  EXPECT_NEAR(cosine_similarity(unweighted(a), unweighted(b)),
              cosine_similarity(unweighted(a5), unweighted(b)), 1e-12);
}

TEST(TermDistribution, Reference) {
  std::vector<TermFrequencyVector> blocks = {tf_vector(reference_block())};
  TermDistribution d = term_distribution(blocks);
  EXPECT_EQ(d.modal_stem, "mov");
  EXPECT_EQ(d.modal_share, Rational(2, 5));
  EXPECT_EQ(d.modal_share.decimal(3), "0.400");
  EXPECT_EQ(d.total, 10u);
  for (std::size_t i = 1; i < d.totals.size(); ++i) {
    EXPECT_GE(d.totals[i - 1].second, d.totals[i].second);
  }
}

TEST(TermDistribution, UniformShares) {
  std::vector<TermFrequencyVector> blocks = {vector_of({{"mov", 2}, {"add", 2}}),
                                             vector_of({{"sub", 2}, {"xor", 2}})};
  TermDistribution d = term_distribution(blocks);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(d.totals[i].second, 2u);
}

TEST(TermDistribution, RealBinaryModalStemIsMov) {
  auto text = read_file(std::string(DDGHASH_TEST_DATA_DIR) + "/true.att.objdump");
  ExtractResult r = extract_features(text, "true");
  TermDistribution d = term_distribution(r.file.term_vectors);
  EXPECT_EQ(d.modal_stem, "mov");
}

TEST(WeightsCsv, HeaderAndWidth) {
  std::vector<TermWeights> rows = {unweighted(vector_of({{"mov", 1}}))};
  std::ostringstream os;
  write_weights_csv(os, dict(), rows);
  std::istringstream in(os.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 31);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 31);
  EXPECT_TRUE(header.starts_with("mov,"));
  EXPECT_TRUE(row.starts_with("1.000000,"));
}

}  // namespace
}  // namespace ddghash
