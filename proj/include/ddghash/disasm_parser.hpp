#pragma once

// Parser for objdump-style disassembly listings (AT&T or Intel syntax).
//
// Both syntaxes are normalized to one structured form: Intel operand order
// (destination first), Intel mnemonic spelling, decimal displacements and
// immediates, size qualifiers dropped and instruction prefixes split off.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ddghash {

enum class Syntax { att, intel };

std::string_view to_string(Syntax syntax);

enum class OperandKind { register_, memory, immediate };

struct Operand {
  OperandKind kind = OperandKind::immediate;
  std::optional<std::string> segment;  // memory only, e.g. "fs"
  std::optional<std::string> base;
  std::optional<std::string> index;
  std::optional<int> scale;
  std::optional<std::int64_t> displacement;
  std::optional<std::int64_t> value;
  // "reg", "[base+index*scale+disp]" or "imm:<decimal>".
  std::string text;

  static Operand make_register(std::string name);
  static Operand make_immediate(std::int64_t value);
  static Operand make_memory(std::optional<std::string> base,
                             std::optional<std::string> index,
                             std::optional<int> scale,
                             std::optional<std::int64_t> displacement,
                             std::optional<std::string> segment = std::nullopt);

  bool operator==(const Operand&) const = default;
};

// Renders the canonical text for the operand's fields.
std::string render_operand(const Operand& op);

namespace prefix {
inline constexpr std::uint32_t lock = 1u << 0;
inline constexpr std::uint32_t rep = 1u << 1;    // rep, repe, repz
inline constexpr std::uint32_t repne = 1u << 2;  // repne, repnz
inline constexpr std::uint32_t other = 1u << 3;  // bnd, notrack, data16, ...
}  // namespace prefix

struct Instruction {
  std::uint64_t address = 0;
  std::string mnemonic;
  std::vector<Operand> operands;  // Intel order: destination first
  std::uint32_t prefixes = 0;
  std::string raw_text;

  // Structural equality; ignores raw_text, which differs between syntaxes.
  bool same_fields(const Instruction& other) const;
};

struct FunctionListing {
  std::string name;
  std::vector<Instruction> instructions;
};

struct MalformedLine {
  std::size_t line_no = 0;  // 1-based
  std::string reason;
};

struct ParseReport {
  std::size_t functions = 0;
  std::size_t instructions = 0;
  std::size_t instruction_lines = 0;  // lines shaped like instructions
  std::size_t skipped_lines = 0;      // data/padding directives
  std::vector<MalformedLine> malformed;
};

struct ParsedListing {
  Syntax syntax = Syntax::intel;
  std::vector<FunctionListing> functions;
  ParseReport report;
};

// Majority vote over the first 100 instruction lines; ties go to Intel.
// Throws NoInstructionsFound.
Syntax detect_syntax(std::string_view text);

// Throws UnparsableOperand.
Operand parse_operand(std::string_view token, Syntax syntax);

// Throws NoInstructionsFound, or ParseFailed when more than 10% of the
// instruction-shaped lines are malformed.
ParsedListing parse_listing(std::string_view text);

// Maximum tolerated malformed fraction of instruction-shaped lines.
inline constexpr double kMaxMalformedFraction = 0.10;

}  // namespace ddghash
