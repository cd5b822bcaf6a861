#include "ddghash/tfidf_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ddghash/errors.hpp"
#include "ddghash/stem_table.inc"

namespace ddghash {

std::string_view builtin_stem_table() { return detail::kBuiltinStemTable; }

TermDictionary TermDictionary::parse(std::string_view table) {
  TermDictionary dict;
  std::istringstream in{std::string(table)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string pattern, stem, extra;
    if (!(fields >> pattern)) continue;
    if (!(fields >> stem) || (fields >> extra)) {
      throw FormatError("stem table line " + std::to_string(line_no) +
                        ": expected 'pattern stem'");
    }
    auto [it, inserted] = dict.stem_index_.try_emplace(stem, dict.stems_.size());
    if (inserted) dict.stems_.push_back(stem);
    if (!dict.pattern_to_stem_.try_emplace(pattern, it->second).second) {
      throw FormatError("stem table line " + std::to_string(line_no) + ": duplicate pattern '" +
                        pattern + "'");
    }
    dict.rules_.emplace_back(pattern, stem);
  }
  if (!dict.stem_index_.contains(std::string(kOtherStem))) {
    dict.stem_index_.emplace(kOtherStem, dict.stems_.size());
    dict.stems_.emplace_back(kOtherStem);
  }
  if (dict.stems_.size() != kStemCount) {
    throw FormatError("stem table defines " + std::to_string(dict.stems_.size()) +
                      " stems; expected " + std::to_string(kStemCount));
  }
  dict.version_ = digest128(table).hex().substr(0, 16);
  return dict;
}

TermDictionary TermDictionary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read stem table: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const TermDictionary& TermDictionary::builtin() {
  static const TermDictionary dict = parse(builtin_stem_table());
  return dict;
}

const std::string& TermDictionary::stem(std::string_view mnemonic) const {
  for (std::size_t len = mnemonic.size(); len > 0; --len) {
    if (auto it = pattern_to_stem_.find(std::string(mnemonic.substr(0, len)));
        it != pattern_to_stem_.end()) {
      return stems_[it->second];
    }
  }
  return stems_[stem_index_.at(std::string(kOtherStem))];
}

std::size_t TermDictionary::index_of(std::string_view stem) const {
  auto it = stem_index_.find(std::string(stem));
  if (it == stem_index_.end()) throw std::out_of_range("unknown stem: " + std::string(stem));
  return it->second;
}

TermFrequencyVector tf_vector(const BasicBlock& block, const TermDictionary& dict) {
  TermFrequencyVector tf;
  tf.block_id = block.id;
  for (const auto& insn : block.instructions) {
    ++tf.counts[dict.index_of(dict.stem(insn.mnemonic))];
    ++tf.total;
  }
  return tf;
}

CorpusIdf idf(std::span<const TermFrequencyVector> corpus) {
  if (corpus.empty()) throw EmptyCorpus();
  CorpusIdf out;
  out.doc_count = corpus.size();
  for (const auto& tf : corpus) {
    for (std::size_t t = 0; t < kStemCount; ++t) {
      if (tf.counts[t] > 0) ++out.df[t];
    }
  }
  const double n = static_cast<double>(out.doc_count);
  for (std::size_t t = 0; t < kStemCount; ++t) {
    out.idf[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(out.df[t]))) + 1.0;
  }
  return out;
}

TermWeights tfidf_weights(const TermFrequencyVector& tf, const CorpusIdf& idf) {
  TermWeights w{};
  for (std::size_t t = 0; t < kStemCount; ++t) w[t] = tf.counts[t] * idf.idf[t];
  return w;
}

TermWeights unweighted(const TermFrequencyVector& tf) {
  TermWeights w{};
  for (std::size_t t = 0; t < kStemCount; ++t) w[t] = tf.counts[t];
  return w;
}

double cosine_similarity(const TermWeights& u, const TermWeights& v) {
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t t = 0; t < kStemCount; ++t) {
    dot += u[t] * v[t];
    nu += u[t] * u[t];
    nv += v[t] * v[t];
  }
  if (nu == 0 || nv == 0) throw ZeroVector();
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), 0.0, 1.0);
}

TermDistribution term_distribution(std::span<const TermFrequencyVector> blocks,
                                   const TermDictionary& dict) {
  if (blocks.empty()) throw std::invalid_argument("term distribution needs at least one block");
  std::array<std::uint64_t, kStemCount> sums{};
  TermDistribution dist;
  for (const auto& tf : blocks) {
    for (std::size_t t = 0; t < kStemCount; ++t) sums[t] += tf.counts[t];
    dist.total += tf.total;
  }
  std::vector<std::size_t> order(kStemCount);
  for (std::size_t t = 0; t < kStemCount; ++t) order[t] = t;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sums[a] > sums[b]; });
  for (std::size_t t : order) dist.totals.emplace_back(dict.stems()[t], sums[t]);
  dist.modal_stem = dist.totals.front().first;
  dist.modal_share = dist.total == 0 ? Rational(0, 1) : Rational(dist.totals.front().second, dist.total);
  return dist;
}

void write_weights_csv(std::ostream& os, const TermDictionary& dict,
                       std::span<const TermWeights> rows) {
  const auto& stems = dict.stems();
  for (std::size_t t = 0; t < stems.size(); ++t) os << (t ? "," : "") << stems[t];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t t = 0; t < kStemCount; ++t) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", row[t]);
      os << (t ? "," : "") << buf;
    }
    os << '\n';
  }
}

}  // namespace ddghash
