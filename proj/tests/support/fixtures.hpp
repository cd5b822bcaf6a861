#pragma once

// Listing fixtures shared by unit and acceptance tests.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ddghash/wl_hash.hpp"

namespace ddghash::fixtures {

// The 10-line reference block without addresses: Intel order,
// decimal offsets, brackets elided.
inline const char* const kReferenceBare =
    "        mov    ecx, rbp - 44\n"
    "        mov    eax, ecx\n"
    "        and    eax, 400\n"
    "        or     eax, 140\n"
    "        or     ecx, 1\n"
    "        cmp    rip + 170, 0\n"
    "        cmovne ecx, eax\n"
    "        mov    rbp - 44, ecx\n"
    "        mov    rip + 180, 0\n"
    "        jmp    0x100000000\n";

// The same block as objdump -M intel would print it.
inline const char* const kReferenceIntel =
    "\n"
    "ref:     file format elf64-x86-64\n"
    "\n"
    "Disassembly of section .text:\n"
    "\n"
    "0000000000001000 <block>:\n"
    "    1000:\t8b 4d d4             \tmov    ecx,DWORD PTR [rbp-0x2c]\n"
    "    1003:\t89 c8                \tmov    eax,ecx\n"
    "    1005:\t25 90 01 00 00       \tand    eax,0x190\n"
    "    100a:\t0d 8c 00 00 00       \tor     eax,0x8c\n"
    "    100f:\t83 c9 01             \tor     ecx,0x1\n"
    "    1012:\t83 3d aa 00 00 00 00 \tcmp    DWORD PTR [rip+0xaa],0x0\n"
    "    1019:\t0f 45 c8             \tcmovne ecx,eax\n"
    "    101c:\t89 4d d4             \tmov    DWORD PTR [rbp-0x2c],ecx\n"
    "    101f:\tc7 05 b4 00 00 00 00 \tmov    DWORD PTR [rip+0xb4],0x0\n"
    "    1026:\t00 00 00 \n"
    "    1029:\te9 d2 ef ff ff       \tjmp    100000000 <_end>\n";

// The same block in objdump's default AT&T syntax.
inline const char* const kReferenceAtt =
    "\n"
    "ref:     file format elf64-x86-64\n"
    "\n"
    "Disassembly of section .text:\n"
    "\n"
    "0000000000001000 <block>:\n"
    "    1000:\t8b 4d d4             \tmov    -0x2c(%rbp),%ecx\n"
    "    1003:\t89 c8                \tmov    %ecx,%eax\n"
    "    1005:\t25 90 01 00 00       \tand    $0x190,%eax\n"
    "    100a:\t0d 8c 00 00 00       \tor     $0x8c,%eax\n"
    "    100f:\t83 c9 01             \tor     $0x1,%ecx\n"
    "    1012:\t83 3d aa 00 00 00 00 \tcmpl   $0x0,0xaa(%rip)\n"
    "    1019:\t0f 45 c8             \tcmovne %eax,%ecx\n"
    "    101c:\t89 4d d4             \tmov    %ecx,-0x2c(%rbp)\n"
    "    101f:\tc7 05 b4 00 00 00 00 \tmovl   $0x0,0xb4(%rip)\n"
    "    1026:\t00 00 00 \n"
    "    1029:\te9 d2 ef ff ff       \tjmp    100000000 <_end>\n";

inline std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string hex_bare(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
  return buf;
}

// Builds an objdump-style listing; one call to add() per instruction.
class ListingWriter {
 public:
  explicit ListingWriter(std::uint64_t start = 0x401000) : address_(start) {
    out_ << "\nprog:     file format elf64-x86-64\n\nDisassembly of section .text:\n";
  }

  void function(const std::string& name) {
    out_ << "\n" << std::string(16 - hex_bare(address_).size(), '0') << hex_bare(address_) << " <"
         << name << ">:\n";
  }

  std::uint64_t address() const { return address_; }

  void add(const std::string& mnemonic, const std::string& operands = "") {
    out_ << "  " << hex_bare(address_) << ":\t90 90 90 90          \t" << mnemonic;
    if (!operands.empty()) out_ << std::string(mnemonic.size() < 7 ? 7 - mnemonic.size() : 1, ' ')
                                << operands;
    out_ << "\n";
    address_ += 4;
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  std::uint64_t address_;
};

// Random instructions rendered in both syntaxes with identical semantics.
class DualSyntaxGenerator {
 public:
  explicit DualSyntaxGenerator(std::uint32_t seed) : rng_(seed) {}

  struct Pair {
    std::string intel;  // mnemonic + operands
    std::string att;
  };

  // Renders n instructions at consecutive addresses as two listings.
  std::pair<std::string, std::string> listings(std::size_t n, std::size_t per_function = 50) {
    ListingWriter intel, att;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % per_function == 0) {
        std::string name = "f" + std::to_string(i / per_function);
        intel.function(name);
        att.function(name);
      }
      auto [mi, oi, ma, oa] = next(intel.address());
      intel.add(mi, oi);
      att.add(ma, oa);
    }
    return {intel.str(), att.str()};
  }

  // mnemonic/operands for Intel then AT&T.
  std::tuple<std::string, std::string, std::string, std::string> next(std::uint64_t address) {
    static const char* const r64[] = {"rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rbp",
                                      "r8",  "r9",  "r10", "r11", "r12", "r13", "r15"};
    static const char* const r32[] = {"eax", "ebx", "ecx", "edx", "esi", "edi", "r8d", "r9d"};
    static const char* const alu[] = {"add", "sub", "and", "or", "xor", "cmp", "mov", "test"};
    static const char* const jcc[] = {"je", "jne", "jg", "jle", "ja", "jb", "js", "jmp"};
    auto pick = [&](auto& arr) { return std::string(arr[uniform(std::size(arr))]); };
    auto imm = [&]() { return uniform(0x2000); };

    switch (uniform(16)) {
      case 0: {  // op r64, r64
        std::string op = pick(alu), d = pick(r64), s = pick(r64);
        return {op, d + "," + s, op, "%" + s + ",%" + d};
      }
      case 1: {  // op r32, imm
        std::string op = pick(alu), d = pick(r32);
        auto v = imm();
        return {op, d + "," + hex(v), op, "$" + hex(v) + ",%" + d};
      }
      case 2: {  // mov r64, mem
        std::string d = pick(r64);
        auto m = memory();
        return {"mov", d + ",QWORD PTR " + m.intel, "mov", m.att + ",%" + d};
      }
      case 3: {  // op mem, r32
        std::string op = pick(alu), s = pick(r32);
        auto m = memory();
        return {op, "DWORD PTR " + m.intel + "," + s, op, "%" + s + "," + m.att};
      }
      case 4: {  // op mem, imm with a size suffix
        std::string op = pick(alu);
        auto m = memory();
        auto v = imm();
        bool q = uniform(2) == 0;
        return {op, std::string(q ? "QWORD" : "DWORD") + " PTR " + m.intel + "," + hex(v),
                op + (q ? "q" : "l"), "$" + hex(v) + "," + m.att};
      }
      case 5: {  // lea
        std::string d = pick(r64);
        auto m = memory();
        return {"lea", d + "," + m.intel, "lea", m.att + ",%" + d};
      }
      case 6: {  // movzx / movsx / movsxd
        std::string d = pick(r32);
        auto m = memory();
        switch (uniform(3)) {
          case 0:
            return {"movzx", d + ",BYTE PTR " + m.intel, "movzbl", m.att + ",%" + d};
          case 1:
            return {"movsx", d + ",WORD PTR " + m.intel, "movswl", m.att + ",%" + d};
          default: {
            std::string d64 = pick(r64);
            return {"movsxd", d64 + ",DWORD PTR " + m.intel, "movslq", m.att + ",%" + d64};
          }
        }
      }
      case 7: {  // push / pop
        std::string op = uniform(2) ? "push" : "pop", r = pick(r64);
        return {op, r, op, "%" + r};
      }
      case 8: {  // three-operand imul
        std::string d = pick(r32), s = pick(r32);
        auto v = imm();
        return {"imul", d + "," + s + "," + hex(v), "imul", "$" + hex(v) + ",%" + s + ",%" + d};
      }
      case 9: {  // direct branch
        std::string op = pick(jcc);
        std::uint64_t target = address + 4 * (1 + uniform(64));
        std::string t = hex_bare(target) + " <f+0x" + hex_bare(uniform(256)) + ">";
        return {op, t, op, t};
      }
      case 10: {  // direct call
        std::string t = hex_bare(0x400000 + 16 * uniform(4096)) + " <callee>";
        return {"call", t, "call", t};
      }
      case 11: {  // indirect call / jump
        auto m = memory();
        if (uniform(2)) return {"call", "QWORD PTR " + m.intel, "call", "*" + m.att};
        std::string r = pick(r64);
        return {"jmp", r, "jmp", "*%" + r};
      }
      case 12: {  // zero-operand
        static const char* const bare[][2] = {
            {"ret", "ret"}, {"nop", "nop"}, {"leave", "leave"}, {"cdqe", "cltq"}, {"cqo", "cqto"}};
        auto& b = bare[uniform(std::size(bare))];
        return {b[0], "", b[1], ""};
      }
      case 13: {  // lock prefix
        std::string s = pick(r32);
        auto m = memory();
        return {"lock add", "DWORD PTR " + m.intel + "," + s, "lock add", "%" + s + "," + m.att};
      }
      case 14: {  // segment override
        auto v = uniform(0x100) * 8;
        std::string d = pick(r64);
        return {"mov", d + ",QWORD PTR fs:" + hex(v), "mov", "%fs:" + hex(v) + ",%" + d};
      }
      default: {  // cmov / xchg / shifts
        std::string d = pick(r64), s = pick(r64);
        switch (uniform(3)) {
          case 0:
            return {"cmovne", d + "," + s, "cmovne", "%" + s + ",%" + d};
          case 1:
            return {"xchg", d + "," + s, "xchg", "%" + s + ",%" + d};
          default: {
            auto v = 2 + uniform(30);
            return {"shl", d + "," + hex(v), "shl", "$" + hex(v) + ",%" + d};
          }
        }
      }
    }
  }

 private:
  struct Mem {
    std::string intel;
    std::string att;
  };

  std::uint64_t uniform(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng_);
  }

  Mem memory() {
    static const char* const bases[] = {"rax", "rbx", "rcx", "rsp", "rbp", "rdi", "r12", "rip"};
    static const char* const indexes[] = {"rax", "rbx", "rcx", "rdx", "rsi", "r9"};
    std::string base = bases[uniform(std::size(bases))];
    bool rip = base == "rip";
    bool has_index = !rip && uniform(2) == 0;
    std::string index = indexes[uniform(std::size(indexes))];
    int scale = 1 << uniform(4);
    std::int64_t disp = 0;
    switch (uniform(3)) {
      case 0:
        disp = 0;
        break;
      case 1:
        disp = static_cast<std::int64_t>(uniform(0x200)) + 1;
        break;
      default:
        disp = -static_cast<std::int64_t>(uniform(0x200)) - 1;
        break;
    }
    if (rip && disp == 0) disp = 0x40;

    std::string sdisp = disp < 0 ? "-" + hex(static_cast<std::uint64_t>(-disp))
                                 : (disp > 0 ? hex(static_cast<std::uint64_t>(disp)) : "");
    Mem m;
    m.intel = "[" + base;
    if (has_index) m.intel += "+" + index + "*" + std::to_string(scale);
    if (disp > 0) m.intel += "+" + sdisp;
    if (disp < 0) m.intel += sdisp;
    m.intel += "]";
    m.att = sdisp + "(%" + base;
    if (has_index) m.att += ",%" + index + "," + std::to_string(scale);
    m.att += ")";
    return m;
  }

  std::mt19937 rng_;
};

// One block per entry: a chain of `chain` register moves followed by
// `stores` immediate stores to distinct slots. Node and edge counts
// (chain + 1 + 2 * stores, chain + stores) identify the shape, so distinct
// (chain, stores) pairs give distinct hashes.
struct ShapeBlock {
  int chain = 1;
  int stores = 0;
};

inline ShapeBlock shape_for(std::size_t i) {
  return {static_cast<int>(1 + i % 13), static_cast<int>(i / 13)};
}

inline std::string shape_listing(const std::vector<ShapeBlock>& blocks) {
  static const char* const regs[] = {"rax", "rbx", "rcx", "rdx", "rsi", "rdi", "r8",
                                     "r9",  "r10", "r11", "r12", "r13", "r14", "r15"};
  ListingWriter w;
  w.function("shapes");
  for (const auto& b : blocks) {
    for (int k = 0; k < b.chain; ++k) w.add("mov", std::string(regs[k + 1]) + "," + regs[k]);
    for (int k = 0; k < b.stores; ++k) {
      w.add("mov", "QWORD PTR [rbp-" + hex(8 * (k + 1)) + "]," + hex(k + 1));
    }
    w.add("ret");
  }
  return w.str();
}

// Program whose distinct hashes are shapes [first, first + count), plus
// `duplicates` repeated blocks.
inline std::string shape_program(std::size_t first, std::size_t count, std::size_t duplicates = 0) {
  std::vector<ShapeBlock> blocks;
  for (std::size_t i = 0; i < count; ++i) blocks.push_back(shape_for(first + i));
  for (std::size_t i = 0; i < duplicates; ++i) blocks.push_back(shape_for(first + i % count));
  return shape_listing(blocks);
}

inline WlHash synthetic_hash(std::uint64_t i) { return digest128("synthetic:" + std::to_string(i)); }

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() /
            ("ddghash-" + tag + "-" + hex_bare(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ddghash::fixtures
