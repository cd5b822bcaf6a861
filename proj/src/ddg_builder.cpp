#include "ddghash/ddg_builder.hpp"

#include <algorithm>
#include <unordered_map>

namespace ddghash {

std::string_view to_string(LabelMode mode) {
  switch (mode) {
    case LabelMode::unlabeled:
      return "unlabeled";
    case LabelMode::operand_class:
      return "operand_class";
    case LabelMode::literal:
      return "literal";
  }
  return "?";
}

std::string_view to_string(InstructionFamilyPolicy policy) {
  return policy == InstructionFamilyPolicy::mov_only ? "mov_only" : "all_data_operands";
}

std::optional<LabelMode> parse_label_mode(std::string_view s) {
  for (auto mode : {LabelMode::unlabeled, LabelMode::operand_class, LabelMode::literal}) {
    if (s == to_string(mode)) return mode;
  }
  return std::nullopt;
}

std::optional<InstructionFamilyPolicy> parse_policy(std::string_view s) {
  for (auto p : {InstructionFamilyPolicy::mov_only, InstructionFamilyPolicy::all_data_operands}) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

bool is_mov_family(std::string_view m) {
  return m == "mov" || m == "movzx" || m == "movsx" || m == "movsxd" || m == "movabs" ||
         m == "xchg" || (m.starts_with("cmov") && m.size() > 4);
}

std::string node_label(const Operand& op, LabelMode mode) {
  switch (mode) {
    case LabelMode::unlabeled:
      return "*";
    case LabelMode::literal:
      return op.text;
    case LabelMode::operand_class:
      break;
  }
  switch (op.kind) {
    case OperandKind::register_:
      return "reg";
    case OperandKind::memory:
      return "mem";
    case OperandKind::immediate:
      return "imm";
  }
  return "?";
}

namespace {

class GraphBuilder {
 public:
  GraphBuilder(std::size_t block_id, LabelMode mode) {
    graph_.block_id = block_id;
    graph_.mode = mode;
  }

  std::size_t node(const Operand& op) {
    auto [it, inserted] = index_.try_emplace(op.text, graph_.nodes.size());
    if (inserted) graph_.nodes.push_back({it->second, op.text, node_label(op, graph_.mode)});
    return it->second;
  }

  // Self-moves keep the node but add no edge.
  void flow(const Operand& src, const Operand& dst) {
    std::size_t s = node(src);
    std::size_t d = node(dst);
    if (s != d) graph_.edges.emplace_back(s, d);
  }

  DataDependencyGraph finish() && {
    auto& e = graph_.edges;
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return std::move(graph_);
  }

 private:
  DataDependencyGraph graph_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace

DataDependencyGraph build_ddg(const BasicBlock& block, InstructionFamilyPolicy policy,
                              LabelMode mode) {
  GraphBuilder builder(block.id, mode);
  for (const auto& insn : block.instructions) {
    const auto& ops = insn.operands;
    if (is_mov_family(insn.mnemonic)) {
      if (ops.size() == 2) {
        builder.flow(ops[1], ops[0]);
        if (insn.mnemonic == "xchg") builder.flow(ops[0], ops[1]);
        continue;
      }
      if (policy == InstructionFamilyPolicy::mov_only) continue;
    } else if (policy == InstructionFamilyPolicy::mov_only) {
      continue;
    }
    if (ops.empty()) continue;
    if (ops.size() == 1) {
      builder.node(ops[0]);
      continue;
    }
    for (std::size_t i = 1; i < ops.size(); ++i) builder.flow(ops[i], ops[0]);
  }
  return std::move(builder).finish();
}

}  // namespace ddghash
