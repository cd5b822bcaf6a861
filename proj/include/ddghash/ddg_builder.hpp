#pragma once

// Per-block data dependency graphs over instruction operands.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ddghash/block_segmenter.hpp"
#include "ddghash/disasm_parser.hpp"

namespace ddghash {

enum class LabelMode { unlabeled, operand_class, literal };

enum class InstructionFamilyPolicy { mov_only, all_data_operands };

std::string_view to_string(LabelMode mode);
std::string_view to_string(InstructionFamilyPolicy policy);
std::optional<LabelMode> parse_label_mode(std::string_view s);
std::optional<InstructionFamilyPolicy> parse_policy(std::string_view s);

struct DdgNode {
  std::size_t id = 0;
  std::string text;   // canonical operand text, unique per graph
  std::string label;  // per LabelMode

  bool operator==(const DdgNode&) const = default;
};

struct DataDependencyGraph {
  std::size_t block_id = 0;
  LabelMode mode = LabelMode::operand_class;
  std::vector<DdgNode> nodes;                            // ordered by first appearance
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // src -> dst, sorted, unique

  bool empty() const { return nodes.empty(); }
  bool operator==(const DataDependencyGraph&) const = default;
};

// mov, movzx, movsx, movsxd, movabs, cmov<cc>, xchg.
bool is_mov_family(std::string_view mnemonic);

std::string node_label(const Operand& op, LabelMode mode);

DataDependencyGraph build_ddg(const BasicBlock& block,
                              InstructionFamilyPolicy policy = InstructionFamilyPolicy::mov_only,
                              LabelMode mode = LabelMode::operand_class);

}  // namespace ddghash
