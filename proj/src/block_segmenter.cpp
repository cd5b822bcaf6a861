#include "ddghash/block_segmenter.hpp"

#include <algorithm>
#include <unordered_map>

namespace ddghash {

namespace {

bool terminates(TransferKind kind, const SegmentOptions& options) {
  if (kind == TransferKind::none) return false;
  if (kind == TransferKind::call) return options.call_terminates_block;
  return true;
}

bool is_jump(TransferKind kind) {
  return kind == TransferKind::unconditional_jump || kind == TransferKind::conditional_jump;
}

// Direct target of a jump, if its single operand is an immediate address.
std::optional<std::uint64_t> direct_target(const Instruction& insn) {
  if (insn.operands.size() != 1 || insn.operands[0].kind != OperandKind::immediate) {
    return std::nullopt;
  }
  return static_cast<std::uint64_t>(*insn.operands[0].value);
}

}  // namespace

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::jump:
      return "jump";
    case EdgeKind::fallthrough:
      return "fallthrough";
    case EdgeKind::call_return:
      return "call_return";
  }
  return "?";
}

TransferKind classify_transfer(std::string_view m) {
  if (m == "jmp" || m == "ljmp") return TransferKind::unconditional_jump;
  if (m.starts_with("j") || m.starts_with("loop")) return TransferKind::conditional_jump;
  if (m == "call" || m == "lcall") return TransferKind::call;
  if (m == "ret" || m == "retf" || m == "retn" || m.starts_with("iret") || m == "sysret" ||
      m == "sysexit") {
    return TransferKind::ret;
  }
  if (m == "int" || m == "int1" || m == "int3" || m == "into" || m == "syscall" ||
      m == "sysenter") {
    return TransferKind::interrupt;
  }
  if (m == "hlt" || m == "ud2") return TransferKind::halt;
  return TransferKind::none;
}

std::vector<BasicBlock> segment(const FunctionListing& listing, std::size_t first_id,
                                const SegmentOptions& options) {
  const auto& insns = listing.instructions;
  std::vector<bool> leader(insns.size(), false);
  if (insns.empty()) return {};
  leader[0] = true;

  std::unordered_map<std::uint64_t, std::size_t> position;
  position.reserve(insns.size());
  for (std::size_t i = 0; i < insns.size(); ++i) position.emplace(insns[i].address, i);

  for (std::size_t i = 0; i < insns.size(); ++i) {
    TransferKind kind = classify_transfer(insns[i].mnemonic);
    if (!terminates(kind, options)) continue;
    if (i + 1 < insns.size()) leader[i + 1] = true;
    if (is_jump(kind)) {
      if (auto target = direct_target(insns[i])) {
        if (auto it = position.find(*target); it != position.end()) leader[it->second] = true;
      }
    }
  }

  std::vector<BasicBlock> blocks;
  for (std::size_t i = 0; i < insns.size(); ++i) {
    if (leader[i]) {
      BasicBlock block;
      block.id = first_id + blocks.size();
      block.function = listing.name;
      block.start_address = insns[i].address;
      blocks.push_back(std::move(block));
    }
    blocks.back().instructions.push_back(insns[i]);
  }
  return blocks;
}

ControlFlowGraph build_cfg(const std::vector<BasicBlock>& blocks, const SegmentOptions& options) {
  ControlFlowGraph cfg;
  if (blocks.empty()) return cfg;

  std::unordered_map<std::uint64_t, std::size_t> block_at;
  for (const auto& block : blocks) {
    cfg.nodes.push_back(block.id);
    block_at.emplace(block.start_address, block.id);
  }
  const std::uint64_t lo = blocks.front().start_address;
  const std::uint64_t hi = blocks.back().instructions.back().address;

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& block = blocks[b];
    const Instruction& last = block.instructions.back();
    const bool has_next = b + 1 < blocks.size();
    const std::size_t next_id = has_next ? blocks[b + 1].id : 0;
    TransferKind kind = classify_transfer(last.mnemonic);
    if (kind == TransferKind::call && !options.call_terminates_block) kind = TransferKind::none;

    if (is_jump(kind)) {
      if (auto target = direct_target(last)) {
        if (auto it = block_at.find(*target); it != block_at.end()) {
          cfg.edges.push_back({block.id, it->second, EdgeKind::jump});
        } else if (*target >= lo && *target <= hi) {
          cfg.dangling_targets.push_back(*target);
        } else {
          cfg.external.push_back({block.id, *target});
        }
      } else {
        ++cfg.indirect_jumps;
      }
    }

    if (!has_next) continue;
    switch (kind) {
      case TransferKind::none:
      case TransferKind::conditional_jump:
      case TransferKind::interrupt:
        cfg.edges.push_back({block.id, next_id, EdgeKind::fallthrough});
        break;
      case TransferKind::call:
        cfg.edges.push_back({block.id, next_id, EdgeKind::call_return});
        break;
      case TransferKind::unconditional_jump:
      case TransferKind::ret:
      case TransferKind::halt:
        break;
    }
  }
  std::sort(cfg.edges.begin(), cfg.edges.end());
  cfg.edges.erase(std::unique(cfg.edges.begin(), cfg.edges.end()), cfg.edges.end());
  return cfg;
}

}  // namespace ddghash
