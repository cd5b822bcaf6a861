#pragma once

// Basic-block segmentation and intra-function control flow recovery.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ddghash/disasm_parser.hpp"

namespace ddghash {

struct BasicBlock {
  std::size_t id = 0;
  std::string function;
  std::uint64_t start_address = 0;
  std::vector<Instruction> instructions;
};

enum class EdgeKind { jump, fallthrough, call_return };

std::string_view to_string(EdgeKind kind);

struct CfgEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  EdgeKind kind = EdgeKind::jump;

  auto operator<=>(const CfgEdge&) const = default;
};

// A direct jump whose target lies outside the function.
struct ExternalEdge {
  std::size_t src = 0;
  std::uint64_t target = 0;

  auto operator<=>(const ExternalEdge&) const = default;
};

struct ControlFlowGraph {
  std::vector<std::size_t> nodes;
  std::vector<CfgEdge> edges;  // sorted, unique
  std::vector<ExternalEdge> external;
  // In-range jump targets that are not instruction boundaries.
  std::vector<std::uint64_t> dangling_targets;
  std::size_t indirect_jumps = 0;
};

struct SegmentOptions {
  // Treat call as a block terminator (with a call_return edge).
  bool call_terminates_block = true;
};

enum class TransferKind {
  none,
  unconditional_jump,
  conditional_jump,
  call,
  ret,
  interrupt,  // int/syscall: control returns to the next instruction
  halt,       // hlt/ud2: no successor
};

TransferKind classify_transfer(std::string_view mnemonic);

// Block ids are assigned consecutively starting at first_id.
std::vector<BasicBlock> segment(const FunctionListing& listing, std::size_t first_id = 0,
                                const SegmentOptions& options = {});

ControlFlowGraph build_cfg(const std::vector<BasicBlock>& blocks,
                           const SegmentOptions& options = {});

}  // namespace ddghash
