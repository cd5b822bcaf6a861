#include "ddghash/wl_hash.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "ddghash/errors.hpp"

namespace ddghash {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

void put_sorted(std::string& out, std::vector<std::string_view> labels) {
  std::sort(labels.begin(), labels.end());
  put_u32(out, static_cast<std::uint32_t>(labels.size()));
  for (auto l : labels) put_str(out, l);
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::optional<WlHash> WlHash::from_hex(std::string_view hex) {
  if (hex.size() != 32) return std::nullopt;
  Bytes bytes{};
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return WlHash(bytes);
}

std::string WlHash::hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(32, '0');
  for (std::size_t i = 0; i < bytes_.size(); ++i) {
    out[2 * i] = digits[bytes_[i] >> 4];
    out[2 * i + 1] = digits[bytes_[i] & 0xf];
  }
  return out;
}

std::size_t WlHashHasher::operator()(const WlHash& h) const noexcept {
  std::size_t v = 0;
  std::memcpy(&v, h.bytes().data(), sizeof(v));
  return v;
}

WlHash digest128(std::string_view bytes) {
  static const bool ready = sodium_init() >= 0;
  if (!ready) throw std::runtime_error("libsodium initialization failed");
  WlHash::Bytes out{};
  crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(bytes.data()),
                     bytes.size(), nullptr, 0);
  return WlHash(out);
}

std::vector<std::string> wl_refine(const DataDependencyGraph& graph,
                                   const std::vector<std::string>& labels) {
  const std::size_t n = graph.nodes.size();
  std::vector<std::vector<std::string_view>> in(n), out(n);
  for (auto [src, dst] : graph.edges) {
    out[src].push_back(labels[dst]);
    in[dst].push_back(labels[src]);
  }
  std::vector<std::string> next(n);
  std::string buffer;
  for (std::size_t v = 0; v < n; ++v) {
    buffer.clear();
    buffer.push_back('R');
    put_str(buffer, labels[v]);
    put_sorted(buffer, std::move(in[v]));
    put_sorted(buffer, std::move(out[v]));
    next[v] = digest128(buffer).hex();
  }
  return next;
}

WlHash wl_hash(const DataDependencyGraph& graph, const WLParams& params) {
  if (graph.nodes.empty()) throw EmptyGraph();
  if (params.iterations < 1) throw std::invalid_argument("WL iterations must be >= 1");
  if (params.digest_bits != 128) throw std::invalid_argument("only 128-bit digests are supported");

  std::vector<std::string> labels;
  labels.reserve(graph.nodes.size());
  for (const auto& node : graph.nodes) labels.push_back(node.label);

  std::string buffer;
  buffer.push_back('G');
  put_u64(buffer, graph.nodes.size());
  put_u64(buffer, graph.edges.size());
  put_u32(buffer, static_cast<std::uint32_t>(params.iterations + 1));
  auto append_round = [&](const std::vector<std::string>& round) {
    put_sorted(buffer, std::vector<std::string_view>(round.begin(), round.end()));
  };
  append_round(labels);
  for (int i = 0; i < params.iterations; ++i) {
    labels = wl_refine(graph, labels);
    append_round(labels);
  }
  return digest128(buffer);
}

}  // namespace ddghash
