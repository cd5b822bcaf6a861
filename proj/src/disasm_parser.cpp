#include "ddghash/disasm_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "ddghash/errors.hpp"

namespace ddghash {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

bool is_hex_digit(char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; }

bool all_of(std::string_view s, int (*pred)(int)) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [&](char c) { return pred(static_cast<unsigned char>(c)) != 0; });
}

// ---------------------------------------------------------------------------
// Registers

bool is_register(std::string_view name) {
  static const std::unordered_set<std::string_view> fixed = {
      "rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rbp", "rsp",
      "eax", "ebx", "ecx", "edx", "esi", "edi", "ebp", "esp",
      "ax",  "bx",  "cx",  "dx",  "si",  "di",  "bp",  "sp",
      "al",  "bl",  "cl",  "dl",  "ah",  "bh",  "ch",  "dh",
      "sil", "dil", "bpl", "spl", "rip", "eip", "ip",  "riz", "eiz",
      "cs",  "ds",  "es",  "fs",  "gs",  "ss",  "st"};
  if (fixed.contains(name)) return true;

  auto numbered = [&](std::string_view prefix, int max, std::string_view suffixes) {
    if (!name.starts_with(prefix)) return false;
    std::string_view rest = name.substr(prefix.size());
    std::size_t digits = 0;
    while (digits < rest.size() && std::isdigit(static_cast<unsigned char>(rest[digits]))) ++digits;
    if (digits == 0 || digits > 2) return false;
    int n = 0;
    std::from_chars(rest.data(), rest.data() + digits, n);
    if (n > max) return false;
    std::string_view suffix = rest.substr(digits);
    if (suffix.empty()) return true;
    return suffix.size() == 1 && suffixes.find(suffix[0]) != std::string_view::npos;
  };
  if (name.starts_with("r") && numbered("r", 15, "dwb")) {
    // r0..r7 are not x86-64 names
    int n = 0;
    std::from_chars(name.data() + 1, name.data() + name.size(), n);
    return n >= 8;
  }
  if (numbered("xmm", 31, "") || numbered("ymm", 31, "") || numbered("zmm", 31, "")) return true;
  if (numbered("mm", 7, "") || numbered("k", 7, "") || numbered("cr", 15, "") ||
      numbered("dr", 15, "") || numbered("bnd", 3, "")) {
    return true;
  }
  if (name.size() == 5 && name.starts_with("st(") && name[3] >= '0' && name[3] <= '7' &&
      name[4] == ')') {
    return true;
  }
  return false;
}

bool is_vector_register(std::string_view name) {
  return name.starts_with("xmm") || name.starts_with("ymm") || name.starts_with("zmm") ||
         (name.starts_with("mm") && name.size() == 3);
}

std::string canonical_register(std::string_view name) {
  std::string reg = lower(name);
  if (reg == "st") return "st(0)";
  return reg;
}

// ---------------------------------------------------------------------------
// Numbers

// Parses "[-]0x<hex>" or "[-]<decimal>"; a bare hex string when bare_hex.
// Values wrap modulo 2^64 so that 0xffffffffffffffd4 and -0x2c agree.
std::optional<std::int64_t> parse_number(std::string_view s, bool bare_hex = false) {
  s = trim(s);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s = trim(s.substr(1));
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    s.remove_prefix(2);
    base = 16;
  } else if (bare_hex) {
    base = 16;
  }
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  if (negative) v = ~v + 1;
  return static_cast<std::int64_t>(v);
}

bool is_bare_hex(std::string_view s) { return all_of(s, std::isxdigit); }

// ---------------------------------------------------------------------------
// Operands

std::optional<std::string> split_segment(std::string_view& token, bool att) {
  static constexpr std::array<std::string_view, 6> segs = {"cs", "ds", "es", "fs", "gs", "ss"};
  std::string_view t = token;
  if (att) {
    if (t.empty() || t.front() != '%') return std::nullopt;
    t.remove_prefix(1);
  }
  for (auto seg : segs) {
    if (t.size() > 3 && starts_with_ci(t, seg) && t[2] == ':') {
      token = trim(t.substr(3));
      return std::string(seg);
    }
  }
  return std::nullopt;
}

std::string_view strip_size_qualifier(std::string_view token) {
  static constexpr std::array<std::string_view, 11> sizes = {
      "byte", "word", "dword", "qword", "tbyte", "fword", "oword",
      "xmmword", "ymmword", "zmmword", "mmword"};
  for (auto size : sizes) {
    if (!starts_with_ci(token, size)) continue;
    std::string_view rest = trim(token.substr(size.size()));
    if (starts_with_ci(rest, "ptr") &&
        (rest.size() == 3 || std::isspace(static_cast<unsigned char>(rest[3])))) {
      return trim(rest.substr(3));
    }
  }
  return token;
}

// Intel address expression: terms joined by '+'/'-', e.g. "rbp-0x2c",
// "rax+rbx*4+0x10", "rip + 170".
Operand parse_intel_address(std::string_view expr, std::optional<std::string> segment,
                            std::string_view original) {
  std::optional<std::string> base, index;
  std::optional<int> scale;
  std::optional<std::int64_t> disp;
  std::uint64_t disp_acc = 0;

  std::size_t pos = 0;
  bool negative = false;
  expr = trim(expr);
  if (expr.empty()) throw UnparsableOperand(std::string(original));
  while (pos < expr.size()) {
    while (pos < expr.size() && std::isspace(static_cast<unsigned char>(expr[pos]))) ++pos;
    if (pos < expr.size() && (expr[pos] == '+' || expr[pos] == '-')) {
      negative = expr[pos] == '-';
      ++pos;
    }
    std::size_t end = pos;
    while (end < expr.size() && expr[end] != '+' && expr[end] != '-') ++end;
    std::string_view term = trim(expr.substr(pos, end - pos));
    pos = end;
    if (term.empty()) throw UnparsableOperand(std::string(original));

    auto star = term.find('*');
    if (star != std::string_view::npos) {
      std::string_view left = trim(term.substr(0, star));
      std::string_view right = trim(term.substr(star + 1));
      std::string reg = lower(left);
      auto factor = parse_number(right);
      if (!is_register(reg)) {
        std::swap(left, right);
        reg = lower(left);
        factor = parse_number(right);
      }
      if (!is_register(reg) || !factor || negative || index) {
        throw UnparsableOperand(std::string(original));
      }
      if (*factor != 1 && *factor != 2 && *factor != 4 && *factor != 8) {
        throw UnparsableOperand(std::string(original));
      }
      index = canonical_register(reg);
      scale = static_cast<int>(*factor);
    } else if (std::string reg = lower(term); is_register(reg)) {
      if (negative) throw UnparsableOperand(std::string(original));
      if (!base) {
        base = canonical_register(reg);
      } else if (!index) {
        index = canonical_register(reg);
        scale = 1;
      } else {
        throw UnparsableOperand(std::string(original));
      }
    } else if (auto n = parse_number(term)) {
      std::uint64_t v = static_cast<std::uint64_t>(*n);
      disp_acc = negative ? disp_acc - v : disp_acc + v;
      disp = static_cast<std::int64_t>(disp_acc);
    } else {
      throw UnparsableOperand(std::string(original));
    }
    negative = false;
  }
  return Operand::make_memory(std::move(base), std::move(index), scale, disp, std::move(segment));
}

Operand parse_intel(std::string_view token, bool branch) {
  std::string_view original = token;
  token = strip_size_qualifier(trim(token));
  auto segment = split_segment(token, false);

  if (token.size() >= 2 && token.front() == '[' && token.back() == ']') {
    return parse_intel_address(token.substr(1, token.size() - 2), std::move(segment), original);
  }
  if (segment) return parse_intel_address(token, std::move(segment), original);

  std::string reg = lower(token);
  if (is_register(reg)) return Operand::make_register(canonical_register(reg));
  if (branch && is_bare_hex(token)) {
    if (auto n = parse_number(token, true)) return Operand::make_immediate(*n);
  }
  if (auto n = parse_number(token)) return Operand::make_immediate(*n);
  // Address expression with brackets elided by typesetting, e.g. "rbp - 44".
  if (token.find_first_of("+-*") != std::string_view::npos) {
    return parse_intel_address(token, std::nullopt, original);
  }
  throw UnparsableOperand(std::string(original));
}

std::string att_register(std::string_view s, std::string_view original) {
  s = trim(s);
  if (s.empty() || s.front() != '%') throw UnparsableOperand(std::string(original));
  std::string reg = lower(s.substr(1));
  if (!is_register(reg)) throw UnparsableOperand(std::string(original));
  return canonical_register(reg);
}

Operand parse_att(std::string_view token, bool branch) {
  std::string_view original = token;
  token = trim(token);
  if (!token.empty() && token.front() == '*') token = trim(token.substr(1));
  if (token.empty()) throw UnparsableOperand(std::string(original));

  if (token.front() == '$') {
    auto n = parse_number(token.substr(1));
    if (!n) throw UnparsableOperand(std::string(original));
    return Operand::make_immediate(*n);
  }

  auto segment = split_segment(token, true);
  if (!segment && token.front() == '%') {
    return Operand::make_register(att_register(token, original));
  }

  auto open = token.find('(');
  if (open == std::string_view::npos) {
    if (!segment && branch && is_bare_hex(token)) {
      if (auto n = parse_number(token, true)) return Operand::make_immediate(*n);
    }
    auto n = parse_number(token);
    if (!n) throw UnparsableOperand(std::string(original));
    return Operand::make_memory(std::nullopt, std::nullopt, std::nullopt, *n, std::move(segment));
  }
  if (token.back() != ')') throw UnparsableOperand(std::string(original));

  std::optional<std::int64_t> disp;
  std::string_view disp_text = trim(token.substr(0, open));
  if (!disp_text.empty()) {
    disp = parse_number(disp_text);
    if (!disp) throw UnparsableOperand(std::string(original));
  }
  std::string_view inner = token.substr(open + 1, token.size() - open - 2);
  std::array<std::string_view, 3> parts{};
  std::size_t count = 0;
  while (true) {
    auto comma = inner.find(',');
    if (count == parts.size()) throw UnparsableOperand(std::string(original));
    parts[count++] = trim(inner.substr(0, comma));
    if (comma == std::string_view::npos) break;
    inner.remove_prefix(comma + 1);
  }
  std::optional<std::string> base, index;
  std::optional<int> scale;
  if (!parts[0].empty()) base = att_register(parts[0], original);
  if (count >= 2 && !parts[1].empty()) index = att_register(parts[1], original);
  if (count == 3 && !parts[2].empty()) {
    auto factor = parse_number(parts[2]);
    if (!factor || (*factor != 1 && *factor != 2 && *factor != 4 && *factor != 8)) {
      throw UnparsableOperand(std::string(original));
    }
    scale = static_cast<int>(*factor);
  }
  if (!base && !index && !disp) throw UnparsableOperand(std::string(original));
  return Operand::make_memory(std::move(base), std::move(index), scale, disp, std::move(segment));
}

Operand parse_operand_in_context(std::string_view token, Syntax syntax, bool branch) {
  return syntax == Syntax::att ? parse_att(token, branch) : parse_intel(token, branch);
}

// Splits on commas outside () and [].
std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '(' || c == '[') ++depth;
    else if (c == ')' || c == ']') --depth;
    else if (c == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  std::string_view last = trim(s.substr(start));
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

// ---------------------------------------------------------------------------
// Mnemonics

bool is_branch_mnemonic(std::string_view m) {
  return m.starts_with("j") || m.starts_with("loop") || m == "call" || m == "xbegin";
}

// AT&T spells some instructions differently and adds size suffixes.
std::string normalize_att_mnemonic(const std::string& m, bool has_vector_operand) {
  static const std::unordered_map<std::string_view, std::string_view> renames = {
      {"movzbl", "movzx"}, {"movzbw", "movzx"}, {"movzbq", "movzx"}, {"movzwl", "movzx"},
      {"movzwq", "movzx"}, {"movsbl", "movsx"}, {"movsbw", "movsx"}, {"movsbq", "movsx"},
      {"movswl", "movsx"}, {"movswq", "movsx"}, {"movslq", "movsxd"}, {"cltq", "cdqe"},
      {"cqto", "cqo"},     {"cltd", "cdq"},     {"cwtl", "cwde"},    {"cbtw", "cbw"},
      {"cwtd", "cwd"},     {"lret", "retf"},    {"lretq", "retf"}};
  static const std::unordered_set<std::string_view> suffixable = {
      "mov",  "add",  "sub",  "and",  "or",   "xor",     "cmp",  "test", "lea",  "push",
      "pop",  "inc",  "dec",  "neg",  "not",  "shl",     "shr",  "sal",  "sar",  "rol",
      "ror",  "rcl",  "rcr",  "imul", "mul",  "idiv",    "div",  "adc",  "sbb",  "call",
      "jmp",  "ret",  "nop",  "xchg", "xadd", "cmpxchg", "bt",   "bts",  "btr",  "btc",
      "movs", "stos", "lods", "scas", "cmps", "leave",   "iret", "shld", "shrd", "bsf",
      "bsr",  "popcnt", "lzcnt", "tzcnt", "enter", "sysret"};
  if (auto it = renames.find(m); it != renames.end()) return std::string(it->second);
  // cvtsi2sdq, vcvtusi2ssl: the integer source size is a suffix
  if (m.size() > 1 && (m.back() == 'l' || m.back() == 'q')) {
    std::string_view stem(m.data(), m.size() - 1);
    if (stem.starts_with("v")) stem.remove_prefix(1);
    if (stem == "cvtsi2sd" || stem == "cvtsi2ss" || stem == "cvtusi2sd" || stem == "cvtusi2ss") {
      return m.substr(0, m.size() - 1);
    }
  }
  if (!has_vector_operand && m.size() > 1) {
    char last = m.back();
    if (last == 'b' || last == 'w' || last == 'l' || last == 'q') {
      std::string_view stem(m.data(), m.size() - 1);
      if (suffixable.contains(stem) && !suffixable.contains(m)) return std::string(stem);
    }
  }
  return m;
}

// Remaining AT&T/Intel spelling differences in objdump output.
void fix_att_spelling(std::string& m, std::vector<Operand>& ops) {
  static const std::unordered_set<std::string_view> shifts = {"shl", "shr", "sal", "sar",
                                                              "rol", "ror", "rcl", "rcr"};
  // "shr %rax" is "shr rax,1"
  if (ops.size() == 1 && shifts.contains(m)) {
    ops.push_back(Operand::make_immediate(1));
    return;
  }
  if (m.empty() || m.front() != 'f') return;

  // x87 memory forms carry a size suffix: flds, fildll, fstpt.
  static const std::unordered_set<std::string_view> x87 = {
      "fld",  "fst",   "fstp",   "fild",  "fist",  "fistp", "fisttp", "fadd",  "fsub",
      "fsubr", "fmul", "fdiv",   "fdivr", "fcom",  "fcomp", "fiadd",  "fisub", "fisubr",
      "fimul", "fidiv", "fidivr", "ficom", "ficomp"};
  bool memory = std::any_of(ops.begin(), ops.end(),
                            [](const Operand& op) { return op.kind == OperandKind::memory; });
  if (memory && !x87.contains(m)) {
    for (std::string_view suffix : {"ll", "s", "l", "t"}) {
      if (m.size() > suffix.size() && std::string_view(m).ends_with(suffix) &&
          x87.contains(std::string_view(m).substr(0, m.size() - suffix.size()))) {
        m.resize(m.size() - suffix.size());
        break;
      }
    }
  }

  // AT&T swaps fsub/fsubr and fdiv/fdivr when the destination is st(i), i != 0.
  static const std::unordered_map<std::string_view, std::string_view> swapped = {
      {"fsub", "fsubr"},   {"fsubr", "fsub"},   {"fsubp", "fsubrp"}, {"fsubrp", "fsubp"},
      {"fdiv", "fdivr"},   {"fdivr", "fdiv"},   {"fdivp", "fdivrp"}, {"fdivrp", "fdivp"}};
  if (ops.size() == 2 && ops[0].kind == OperandKind::register_ &&
      ops[0].base->starts_with("st(") && *ops[0].base != "st(0)") {
    if (auto it = swapped.find(m); it != swapped.end()) m = std::string(it->second);
  }
}

bool valid_mnemonic(std::string_view m) {
  return !m.empty() && std::all_of(m.begin(), m.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.';
  });
}

std::uint32_t prefix_flag(std::string_view word) {
  if (word == "lock") return prefix::lock;
  if (word == "rep" || word == "repe" || word == "repz") return prefix::rep;
  if (word == "repne" || word == "repnz") return prefix::repne;
  static const std::unordered_set<std::string_view> others = {
      "bnd",    "notrack", "data16", "data32", "addr16", "addr32", "xacquire",
      "xrelease", "cs",    "ds",     "es",     "fs",     "gs",     "ss"};
  if (others.contains(word) || word.starts_with("rex")) return prefix::other;
  return 0;
}

bool is_directive(std::string_view word) {
  return word.starts_with(".") || word == "(bad)" || word == "...";
}

// Removes "# comment" and "<symbol+off>" annotations.
std::string strip_annotations(std::string_view body) {
  if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
  std::string out;
  out.reserve(body.size());
  int depth = 0;
  for (char c : body) {
    if (c == '<') {
      ++depth;
    } else if (c == '>' && depth > 0) {
      --depth;
    } else if (depth == 0) {
      out.push_back(c);
    }
  }
  return std::string(trim(out));
}

enum class DecodeStatus { ok, directive, malformed };

struct Decoded {
  DecodeStatus status = DecodeStatus::ok;
  Instruction insn;
  std::string reason;
};

Decoded decode_instruction(std::string_view body, Syntax syntax) {
  Decoded d;
  std::string text = strip_annotations(body);
  std::string_view rest = text;
  d.insn.raw_text = std::string(trim(body));

  auto next_word = [&]() {
    rest = trim(rest);
    std::size_t end = 0;
    while (end < rest.size() && !std::isspace(static_cast<unsigned char>(rest[end]))) ++end;
    std::string_view word = rest.substr(0, end);
    rest.remove_prefix(end);
    return word;
  };

  std::string_view word = next_word();
  if (word.empty()) {
    d.status = DecodeStatus::malformed;
    d.reason = "empty instruction";
    return d;
  }
  if (is_directive(word)) {
    d.status = DecodeStatus::directive;
    return d;
  }
  std::string mnemonic = lower(word);
  while (true) {
    std::uint32_t flag = prefix_flag(mnemonic);
    if (flag == 0 || trim(rest).empty()) break;
    // "cs nopw ..." style segment prefixes, "lock cmpxchg ..."
    d.insn.prefixes |= flag;
    word = next_word();
    mnemonic = lower(word);
  }
  if (is_directive(mnemonic)) {
    d.status = DecodeStatus::directive;
    return d;
  }
  if (!valid_mnemonic(mnemonic)) {
    d.status = DecodeStatus::malformed;
    d.reason = "invalid mnemonic '" + mnemonic + "'";
    return d;
  }

  // EVEX decorations ({k1}, {z}, {1to8}, {rn-sae}) are not operands.
  std::string undecorated;
  bool decorated = rest.find('{') != std::string_view::npos;
  if (decorated) {
    int depth = 0;
    for (char c : rest) {
      if (c == '{') ++depth;
      else if (c == '}') depth = std::max(depth - 1, 0);
      else if (depth == 0) undecorated += c;
    }
    rest = undecorated;
  }
  auto tokens = split_operands(trim(rest));
  if (decorated) std::erase_if(tokens, [](std::string_view t) { return t.empty(); });
  if (tokens.size() > 3) {
    d.status = DecodeStatus::malformed;
    d.reason = "too many operands";
    return d;
  }
  bool branch = is_branch_mnemonic(mnemonic) ||
                (syntax == Syntax::att && is_branch_mnemonic(normalize_att_mnemonic(mnemonic, false)));
  try {
    for (auto token : tokens) {
      d.insn.operands.push_back(parse_operand_in_context(token, syntax, branch));
    }
  } catch (const UnparsableOperand& e) {
    d.status = DecodeStatus::malformed;
    d.reason = e.what();
    return d;
  }
  if (syntax == Syntax::att) {
    std::reverse(d.insn.operands.begin(), d.insn.operands.end());
    bool vec = std::any_of(d.insn.operands.begin(), d.insn.operands.end(), [](const Operand& op) {
      return op.kind == OperandKind::register_ && is_vector_register(*op.base);
    });
    mnemonic = normalize_att_mnemonic(mnemonic, vec);
    fix_att_spelling(mnemonic, d.insn.operands);
  }
  d.insn.mnemonic = std::move(mnemonic);
  return d;
}

// ---------------------------------------------------------------------------
// Line scanning

enum class LineKind { header, instruction, other };

struct ScannedLine {
  LineKind kind = LineKind::other;
  std::size_t line_no = 0;
  std::optional<std::uint64_t> address;
  std::string_view name;  // header symbol
  std::string_view body;  // instruction text
};

bool is_byte_group(std::string_view s) {
  s = trim(s);
  if (s.empty()) return false;
  std::size_t i = 0;
  while (i < s.size()) {
    if (i + 2 > s.size() || !is_hex_digit(s[i]) || !is_hex_digit(s[i + 1])) return false;
    i += 2;
    if (i < s.size()) {
      if (s[i] != ' ') return false;
      ++i;
    }
  }
  return true;
}

std::optional<ScannedLine> scan_header(std::string_view line) {
  std::string_view t = trim(line);
  if (t.size() < 4 || t.back() != ':' || t[t.size() - 2] != '>') return std::nullopt;
  auto open = t.find('<');
  if (open == std::string_view::npos) return std::nullopt;
  std::string_view addr = trim(t.substr(0, open));
  ScannedLine s;
  s.kind = LineKind::header;
  s.name = t.substr(open + 1, t.size() - open - 3);
  if (!addr.empty()) {
    if (!is_bare_hex(addr)) return std::nullopt;
    auto v = parse_number(addr, true);
    if (!v) return std::nullopt;
    s.address = static_cast<std::uint64_t>(*v);
  }
  return s;
}

// "  1139:\t55\tpush %rbp" or "  1139:\tpush %rbp"; continuation lines
// holding only bytes come back as LineKind::other.
std::optional<ScannedLine> scan_address_line(std::string_view line) {
  std::string_view t = line;
  while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.remove_prefix(1);
  std::size_t colon = t.find(':');
  if (colon == 0 || colon == std::string_view::npos) return std::nullopt;
  std::string_view addr = t.substr(0, colon);
  if (!is_bare_hex(addr)) return std::nullopt;
  std::string_view rest = t.substr(colon + 1);
  if (rest.find("file format") != std::string_view::npos) return std::nullopt;
  if (!rest.empty() && rest.front() != '\t' && rest.front() != ' ') return std::nullopt;

  ScannedLine s;
  auto v = parse_number(addr, true);
  if (!v) return std::nullopt;
  s.address = static_cast<std::uint64_t>(*v);
  rest = trim(rest);
  if (rest.empty()) return std::nullopt;
  auto tab = rest.find('\t');
  std::string_view first = rest.substr(0, tab);
  if (is_byte_group(first)) {
    if (tab == std::string_view::npos) {
      s.kind = LineKind::other;
      return s;
    }
    rest = trim(rest.substr(tab + 1));
  }
  if (rest.empty()) {
    s.kind = LineKind::other;
    return s;
  }
  s.kind = LineKind::instruction;
  s.body = rest;
  return s;
}

// Address-less listing line: indented, starting with a mnemonic-like word.
std::optional<ScannedLine> scan_bare_line(std::string_view line) {
  if (line.empty() || (line.front() != ' ' && line.front() != '\t')) return std::nullopt;
  std::string_view t = trim(line);
  if (t.empty()) return std::nullopt;
  if (!(std::islower(static_cast<unsigned char>(t.front())) || t.front() == '.' ||
        t.front() == '(')) {
    return std::nullopt;
  }
  ScannedLine s;
  s.kind = LineKind::instruction;
  s.body = t;
  return s;
}

std::vector<ScannedLine> scan(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? text.npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }

  bool address_mode = false;
  for (auto line : lines) {
    if (auto s = scan_address_line(line); s && s->kind == LineKind::instruction) {
      address_mode = true;
      break;
    }
  }

  std::vector<ScannedLine> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::optional<ScannedLine> s = scan_header(lines[i]);
    if (!s) s = address_mode ? scan_address_line(lines[i]) : scan_bare_line(lines[i]);
    // objdump elides runs of zero bytes as a lone "..." line
    if (!s && address_mode && trim(lines[i]) == "...") {
      s = ScannedLine{LineKind::instruction, 0, std::nullopt, {}, trim(lines[i])};
    }
    if (!s || s->kind == LineKind::other) continue;
    s->line_no = i + 1;
    out.push_back(*s);
  }
  return out;
}

Syntax vote(const std::vector<ScannedLine>& lines) {
  std::size_t att = 0, intel = 0, seen = 0;
  for (const auto& line : lines) {
    if (line.kind != LineKind::instruction) continue;
    if (++seen > 100) break;
    std::string text = strip_annotations(line.body);
    std::string_view rest = trim(text);
    auto space = rest.find_first_of(" \t");
    if (space == std::string_view::npos) continue;  // no operands: abstain
    std::string_view operands = trim(rest.substr(space));
    if (operands.find('%') != std::string_view::npos ||
        operands.find('$') != std::string_view::npos) {
      ++att;
    } else {
      ++intel;
    }
  }
  if (seen == 0) throw NoInstructionsFound();
  return att > intel ? Syntax::att : Syntax::intel;
}

}  // namespace

std::string_view to_string(Syntax syntax) { return syntax == Syntax::att ? "att" : "intel"; }

std::string render_operand(const Operand& op) {
  switch (op.kind) {
    case OperandKind::register_:
      return op.base.value_or("");
    case OperandKind::immediate:
      return "imm:" + std::to_string(op.value.value_or(0));
    case OperandKind::memory:
      break;
  }
  std::string out;
  if (op.segment) out += *op.segment + ":";
  out += '[';
  bool any = false;
  if (op.base) {
    out += *op.base;
    any = true;
  }
  if (op.index) {
    if (any) out += '+';
    out += *op.index + "*" + std::to_string(op.scale.value_or(1));
    any = true;
  }
  if (op.displacement) {
    std::int64_t d = *op.displacement;
    if (!any) {
      out += std::to_string(d);
    } else if (d < 0) {
      // magnitude via unsigned to survive INT64_MIN
      out += '-' + std::to_string(std::uint64_t{0} - static_cast<std::uint64_t>(d));
    } else {
      out += '+' + std::to_string(d);
    }
  }
  out += ']';
  return out;
}

Operand Operand::make_register(std::string name) {
  Operand op;
  op.kind = OperandKind::register_;
  op.base = std::move(name);
  op.text = render_operand(op);
  return op;
}

Operand Operand::make_immediate(std::int64_t value) {
  Operand op;
  op.kind = OperandKind::immediate;
  op.value = value;
  op.text = render_operand(op);
  return op;
}

Operand Operand::make_memory(std::optional<std::string> base, std::optional<std::string> index,
                             std::optional<int> scale, std::optional<std::int64_t> displacement,
                             std::optional<std::string> segment) {
  Operand op;
  op.kind = OperandKind::memory;
  op.segment = std::move(segment);
  // ds is the default data segment; Intel listings print it on absolute addresses.
  if (op.segment == "ds") op.segment.reset();
  op.base = std::move(base);
  op.index = std::move(index);
  op.scale = op.index ? std::optional<int>(scale.value_or(1)) : std::nullopt;
  op.displacement = displacement;
  if (op.displacement == 0 && (op.base || op.index)) op.displacement.reset();
  if (!op.base && !op.index && !op.displacement) op.displacement = 0;
  op.text = render_operand(op);
  return op;
}

bool Instruction::same_fields(const Instruction& other) const {
  return address == other.address && mnemonic == other.mnemonic && operands == other.operands &&
         prefixes == other.prefixes;
}

Syntax detect_syntax(std::string_view text) {
  if (trim(text).empty()) throw NoInstructionsFound();
  return vote(scan(text));
}

Operand parse_operand(std::string_view token, Syntax syntax) {
  // Canonical immediate text reparses to the same operand.
  if (std::string_view t = trim(token); t.starts_with("imm:")) {
    auto n = parse_number(t.substr(4));
    if (!n) throw UnparsableOperand(std::string(token));
    return Operand::make_immediate(*n);
  }
  return parse_operand_in_context(token, syntax, false);
}

ParsedListing parse_listing(std::string_view text) {
  auto lines = scan(text);
  ParsedListing result;
  result.syntax = vote(lines);
  ParseReport& report = result.report;

  FunctionListing current;
  std::uint64_t next_synthetic = 0;
  auto flush = [&]() {
    if (!current.instructions.empty()) result.functions.push_back(std::move(current));
    current = FunctionListing{};
  };

  for (const auto& line : lines) {
    if (line.kind == LineKind::header) {
      flush();
      current.name = std::string(line.name);
      if (line.address) next_synthetic = *line.address;
      continue;
    }
    ++report.instruction_lines;
    Decoded d = decode_instruction(line.body, result.syntax);
    if (d.status == DecodeStatus::directive) {
      ++report.skipped_lines;
      continue;
    }
    if (d.status == DecodeStatus::malformed) {
      report.malformed.push_back({line.line_no, std::move(d.reason)});
      continue;
    }
    d.insn.address = line.address.value_or(next_synthetic);
    if (!current.instructions.empty() && d.insn.address <= current.instructions.back().address) {
      report.malformed.push_back({line.line_no, "non-increasing address"});
      continue;
    }
    next_synthetic = d.insn.address + 1;
    current.instructions.push_back(std::move(d.insn));
  }
  flush();

  for (const auto& fn : result.functions) report.instructions += fn.instructions.size();
  report.functions = result.functions.size();
  if (report.instructions == 0 && report.malformed.empty()) throw NoInstructionsFound();
  if (static_cast<double>(report.malformed.size()) >
      kMaxMalformedFraction * static_cast<double>(report.instruction_lines)) {
    throw ParseFailed(std::to_string(report.malformed.size()) + " of " +
                      std::to_string(report.instruction_lines) +
                      " instruction lines are malformed (first at line " +
                      std::to_string(report.malformed.front().line_no) + ": " +
                      report.malformed.front().reason + ")");
  }
  return result;
}

}  // namespace ddghash
