#include "ddghash/feature_model.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <stdexcept>

#include "ddghash/errors.hpp"

namespace ddghash {

namespace {

using u128 = unsigned __int128;

u128 gcd128(u128 a, u128 b) {
  while (b != 0) {
    u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Rational from_wide(u128 num, u128 den) {
  u128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (num > UINT64_MAX || den > UINT64_MAX) throw std::overflow_error("rational overflow");
  return Rational(static_cast<std::uint64_t>(num), static_cast<std::uint64_t>(den));
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a non-negative number: '" + std::string(s) + "'");
  }
  return v;
}

std::string u128_to_string(u128 v) {
  if (v == 0) return "0";
  std::string out;
  while (v > 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

Rational::Rational(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  std::uint64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

Rational Rational::parse(std::string_view text) {
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return Rational(parse_u64(text.substr(0, slash)), parse_u64(text.substr(slash + 1)));
  }
  auto dot = text.find('.');
  if (dot == std::string_view::npos) return Rational(parse_u64(text), 1);
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = text.substr(dot + 1);
  if (frac.size() > 18) throw std::invalid_argument("too many decimal places");
  std::uint64_t scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  u128 num = static_cast<u128>(whole.empty() ? 0 : parse_u64(whole)) * scale +
             (frac.empty() ? 0 : parse_u64(frac));
  return from_wide(num, scale);
}

std::string Rational::decimal(int places) const {
  u128 scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  u128 scaled = (static_cast<u128>(num_) * scale * 2 + den_) / (static_cast<u128>(den_) * 2);
  std::string whole = u128_to_string(scaled / scale);
  if (places <= 0) return whole;
  std::string frac = u128_to_string(scaled % scale);
  frac.insert(0, static_cast<std::size_t>(places) - frac.size(), '0');
  return whole + "." + frac;
}

std::string Rational::fraction() const {
  return std::to_string(num_) + "/" + std::to_string(den_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  u128 lhs = static_cast<u128>(a.num_) * b.den_;
  u128 rhs = static_cast<u128>(b.num_) * a.den_;
  return lhs <=> rhs;
}

Rational Rational::midpoint(const Rational& a, const Rational& b) {
  u128 num = static_cast<u128>(a.num_) * b.den_ + static_cast<u128>(b.num_) * a.den_;
  u128 den = static_cast<u128>(a.den_) * b.den_ * 2;
  return from_wide(num, den);
}

ProgramFeatureSet make_feature_set(std::string program_id, std::size_t block_count,
                                   const std::vector<DataDependencyGraph>& ddgs,
                                   const std::vector<CfgEdge>& cfg_edges,
                                   const FeatureMetadata& metadata) {
  ProgramFeatureSet fs;
  fs.program_id = std::move(program_id);
  fs.metadata = metadata;
  fs.diagnostics.blocks = block_count;
  for (const auto& ddg : ddgs) {
    if (ddg.empty()) {
      ++fs.diagnostics.empty_ddgs;
      continue;
    }
    fs.block_map.emplace(ddg.block_id, wl_hash(ddg, metadata.wl));
  }
  for (const auto& e : cfg_edges) fs.order_edges.emplace_back(e.src, e.dst);
  std::sort(fs.order_edges.begin(), fs.order_edges.end());
  fs.order_edges.erase(std::unique(fs.order_edges.begin(), fs.order_edges.end()),
                       fs.order_edges.end());
  refresh_hash_set(fs);
  return fs;
}

void refresh_hash_set(ProgramFeatureSet& fs) {
  fs.hashes.clear();
  fs.hashes.reserve(fs.block_map.size());
  for (const auto& [block, hash] : fs.block_map) fs.hashes.push_back(hash);
  std::sort(fs.hashes.begin(), fs.hashes.end());
  fs.hashes.erase(std::unique(fs.hashes.begin(), fs.hashes.end()), fs.hashes.end());
}

namespace {

void require_compatible(const ProgramFeatureSet& a, const ProgramFeatureSet& b) {
  if (!a.metadata.compatible_with(b.metadata)) {
    throw IncompatibleCorpora("feature sets '" + a.program_id + "' and '" + b.program_id +
                              "' were built with different label mode, policy or WL parameters");
  }
}

Rational ratio_or_zero(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? Rational(0, 1) : Rational(num, den);
}

}  // namespace

SimilarityReport compare_sets(const std::vector<WlHash>& a, const std::vector<WlHash>& b) {
  SimilarityReport r;
  r.size_a = a.size();
  r.size_b = b.size();
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++r.intersection;
      ++i;
      ++j;
    }
  }
  r.union_ = r.size_a + r.size_b - r.intersection;
  r.diff_a_minus_b = r.size_a - r.intersection;
  r.diff_b_minus_a = r.size_b - r.intersection;
  r.jaccard = ratio_or_zero(r.intersection, r.union_);
  r.containment_a_in_b = ratio_or_zero(r.intersection, r.size_a);
  r.containment_b_in_a = ratio_or_zero(r.intersection, r.size_b);
  return r;
}

SimilarityReport compare(const ProgramFeatureSet& a, const ProgramFeatureSet& b) {
  require_compatible(a, b);
  SimilarityReport r = compare_sets(a.hashes, b.hashes);
  r.a_id = a.program_id;
  r.b_id = b.program_id;
  return r;
}

std::vector<WlHash> set_difference(const ProgramFeatureSet& a, const ProgramFeatureSet& b) {
  require_compatible(a, b);
  std::vector<WlHash> out;
  std::set_difference(a.hashes.begin(), a.hashes.end(), b.hashes.begin(), b.hashes.end(),
                      std::back_inserter(out));
  return out;
}

std::vector<WlHash> set_intersection(const ProgramFeatureSet& a, const ProgramFeatureSet& b) {
  require_compatible(a, b);
  std::vector<WlHash> out;
  std::set_intersection(a.hashes.begin(), a.hashes.end(), b.hashes.begin(), b.hashes.end(),
                        std::back_inserter(out));
  return out;
}

std::vector<WlHash> set_union(const ProgramFeatureSet& a, const ProgramFeatureSet& b) {
  require_compatible(a, b);
  std::vector<WlHash> out;
  std::set_union(a.hashes.begin(), a.hashes.end(), b.hashes.begin(), b.hashes.end(),
                 std::back_inserter(out));
  return out;
}

PosetExport export_poset(const ProgramFeatureSet& fs) {
  PosetExport out;
  for (auto [src, dst] : fs.order_edges) {
    auto a = fs.block_map.find(src);
    auto b = fs.block_map.find(dst);
    if (a == fs.block_map.end() || b == fs.block_map.end()) {
      ++out.skipped_edges;
      continue;
    }
    out.edges.emplace_back(a->second, b->second);
  }
  std::sort(out.edges.begin(), out.edges.end());
  out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
  out.self_pairs = static_cast<std::size_t>(std::count_if(
      out.edges.begin(), out.edges.end(), [](const auto& e) { return e.first == e.second; }));
  return out;
}

JaccardStats jaccard_stats(std::vector<Rational> values) {
  if (values.empty()) throw std::invalid_argument("no values for statistics");
  std::sort(values.begin(), values.end());
  JaccardStats s;
  s.count = values.size();
  s.min = values.front();
  s.max = values.back();
  std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 == 1 ? values[mid] : Rational::midpoint(values[mid - 1], values[mid]);
  return s;
}

}  // namespace ddghash
