#pragma once

// Directed Weisfeiler-Lehman subtree hashing of data dependency graphs.
//
// The byte serialization fed to the digest is fixed; see docs/FORMATS.md.
// Digest: BLAKE2b with a 16-byte output, unkeyed.

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddghash/ddg_builder.hpp"

namespace ddghash {

struct WLParams {
  int iterations = 3;
  int digest_bits = 128;

  bool operator==(const WLParams&) const = default;
};

// 128-bit graph digest, rendered as 32 lowercase hex characters.
class WlHash {
 public:
  using Bytes = std::array<std::uint8_t, 16>;

  WlHash() = default;
  explicit WlHash(const Bytes& bytes) : bytes_(bytes) {}

  // Accepts exactly 32 hex characters (either case).
  static std::optional<WlHash> from_hex(std::string_view hex);

  std::string hex() const;
  const Bytes& bytes() const { return bytes_; }

  auto operator<=>(const WlHash&) const = default;

 private:
  Bytes bytes_{};
};

struct WlHashHasher {
  std::size_t operator()(const WlHash& h) const noexcept;
};

// 16-byte BLAKE2b of arbitrary bytes.
WlHash digest128(std::string_view bytes);

// One refinement round over node labels indexed by node id.
std::vector<std::string> wl_refine(const DataDependencyGraph& graph,
                                   const std::vector<std::string>& labels);

// Throws EmptyGraph when the graph has no nodes.
WlHash wl_hash(const DataDependencyGraph& graph, const WLParams& params = {});

}  // namespace ddghash
