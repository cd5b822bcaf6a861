#include <gtest/gtest.h>

#include "ddghash/block_segmenter.hpp"
#include "fixtures.hpp"

namespace ddghash {
namespace {

FunctionListing only_function(const std::string& text) {
  ParsedListing p = parse_listing(text);
  EXPECT_EQ(p.functions.size(), 1u);
  return p.functions.at(0);
}

// mov; je L; mov; L: mov; ret
std::string three_block_listing() {
  fixtures::ListingWriter w(0x1000);
  w.function("f");
  w.add("mov", "eax,ebx");
  w.add("je", "100c <f+0xc>");
  w.add("mov", "ecx,eax");
  w.add("mov", "edx,ecx");
  w.add("ret");
  return w.str();
}

TEST(Segment, ReferenceIsOneBlock) {
  auto blocks = segment(only_function(fixtures::kReferenceBare));
  ASSERT_EQ(blocks.size(), 1u);
  EXPECT_EQ(blocks[0].instructions.size(), 10u);
  EXPECT_EQ(blocks[0].id, 0u);
}

TEST(Segment, StraightLineIsOneBlock) {
  fixtures::ListingWriter w;
  w.function("f");
  for (int i = 0; i < 3; ++i) w.add("mov", "eax,ebx");
  auto blocks = segment(only_function(w.str()));
  ASSERT_EQ(blocks.size(), 1u);
  EXPECT_EQ(blocks[0].instructions.size(), 3u);
}

TEST(Segment, LeadersAtZeroTwoThree) {
  FunctionListing f = only_function(three_block_listing());
  auto blocks = segment(f);
  ASSERT_EQ(blocks.size(), 3u);
  EXPECT_EQ(blocks[0].start_address, f.instructions[0].address);
  EXPECT_EQ(blocks[1].start_address, f.instructions[2].address);
  EXPECT_EQ(blocks[2].start_address, f.instructions[3].address);
  EXPECT_EQ(blocks[2].function, "f");
}

TEST(Segment, FirstIdOffsetsBlockIds) {
  auto blocks = segment(only_function(three_block_listing()), 10);
  ASSERT_EQ(blocks.size(), 3u);
  EXPECT_EQ(blocks[0].id, 10u);
  EXPECT_EQ(blocks[2].id, 12u);
}

TEST(BuildCfg, ThreeBlockEdges) {
  auto cfg = build_cfg(segment(only_function(three_block_listing())));
  std::vector<CfgEdge> expected = {{0, 1, EdgeKind::fallthrough},
                                   {0, 2, EdgeKind::jump},
                                   {1, 2, EdgeKind::fallthrough}};
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(cfg.edges, expected);
  EXPECT_TRUE(cfg.external.empty());
  EXPECT_EQ(cfg.nodes.size(), 3u);
}

TEST(BuildCfg, SingleBlockHasNoEdges) {
  fixtures::ListingWriter w;
  w.function("f");
  w.add("mov", "eax,ebx");
  w.add("ret");
  auto cfg = build_cfg(segment(only_function(w.str())));
  EXPECT_TRUE(cfg.edges.empty());
}

TEST(BuildCfg, ReferenceExternalJump) {
  auto cfg = build_cfg(segment(only_function(fixtures::kReferenceBare)));
  EXPECT_TRUE(cfg.edges.empty());
  ASSERT_EQ(cfg.external.size(), 1u);
  EXPECT_EQ(cfg.external[0].src, 0u);
  EXPECT_EQ(cfg.external[0].target, 0x100000000u);
}

TEST(BuildCfg, CallReturnAndIndirect) {
  fixtures::ListingWriter w(0x2000);
  w.function("f");
  w.add("call", "5000 <g>");
  w.add("mov", "eax,ebx");
  w.add("jmp", "rax");
  w.add("nop");
  auto blocks = segment(only_function(w.str()));
  ASSERT_EQ(blocks.size(), 3u);
  auto cfg = build_cfg(blocks);
  ASSERT_EQ(cfg.edges.size(), 1u);
  EXPECT_EQ(cfg.edges[0], (CfgEdge{0, 1, EdgeKind::call_return}));
  EXPECT_EQ(cfg.indirect_jumps, 1u);
  EXPECT_TRUE(cfg.external.empty());  // call targets are not jump edges
}

TEST(BuildCfg, CallCanStayInsideBlock) {
  fixtures::ListingWriter w(0x2000);
  w.function("f");
  w.add("mov", "eax,ebx");
  w.add("call", "5000 <g>");
  w.add("mov", "ecx,eax");
  SegmentOptions options;
  options.call_terminates_block = false;
  auto blocks = segment(only_function(w.str()), 0, options);
  ASSERT_EQ(blocks.size(), 1u);
  EXPECT_EQ(blocks[0].instructions.size(), 3u);
}

TEST(BuildCfg, TargetInsideABlockIsDangling) {
  fixtures::ListingWriter w(0x1000);
  w.function("f");
  w.add("mov", "eax,ebx");
  w.add("jmp", "1002 <f+0x2>");  // between two instruction starts
  w.add("ret");
  auto cfg = build_cfg(segment(only_function(w.str())));
  EXPECT_TRUE(cfg.edges.empty());
  ASSERT_EQ(cfg.dangling_targets.size(), 1u);
  EXPECT_EQ(cfg.dangling_targets[0], 0x1002u);
}

TEST(ClassifyTransfer, Kinds) {
  EXPECT_EQ(classify_transfer("mov"), TransferKind::none);
  EXPECT_EQ(classify_transfer("jmp"), TransferKind::unconditional_jump);
  EXPECT_EQ(classify_transfer("jne"), TransferKind::conditional_jump);
  EXPECT_EQ(classify_transfer("loop"), TransferKind::conditional_jump);
  EXPECT_EQ(classify_transfer("call"), TransferKind::call);
  EXPECT_EQ(classify_transfer("ret"), TransferKind::ret);
  EXPECT_EQ(classify_transfer("syscall"), TransferKind::interrupt);
  EXPECT_EQ(classify_transfer("hlt"), TransferKind::halt);
}

class SegmentProperties : public ::testing::TestWithParam<std::uint32_t> {};

TEST_P(SegmentProperties, PartitionAndLeaders) {
  auto [intel, att] = fixtures::DualSyntaxGenerator(GetParam()).listings(400, 80);
  ParsedListing p = parse_listing(intel);
  std::size_t next_id = 0;
  for (const auto& f : p.functions) {
    auto blocks = segment(f, next_id);
    next_id += blocks.size();

    std::vector<Instruction> joined;
    for (const auto& b : blocks) {
      ASSERT_FALSE(b.instructions.empty());
      for (std::size_t i = 0; i + 1 < b.instructions.size(); ++i) {
        EXPECT_EQ(classify_transfer(b.instructions[i].mnemonic), TransferKind::none)
            << "transfer inside block at " << b.instructions[i].raw_text;
      }
      joined.insert(joined.end(), b.instructions.begin(), b.instructions.end());
    }
    ASSERT_EQ(joined.size(), f.instructions.size());
    for (std::size_t i = 0; i < joined.size(); ++i) EXPECT_TRUE(joined[i].same_fields(f.instructions[i]));

    auto cfg = build_cfg(blocks);
    std::map<std::size_t, const BasicBlock*> by_id;
    for (const auto& b : blocks) by_id[b.id] = &b;
    std::map<std::size_t, int> out_degree;
    for (const auto& e : cfg.edges) {
      ASSERT_TRUE(by_id.contains(e.src));
      ASSERT_TRUE(by_id.contains(e.dst));
      ++out_degree[e.src];
      if (e.kind == EdgeKind::jump) {
        const Instruction& last = by_id[e.src]->instructions.back();
        ASSERT_FALSE(last.operands.empty());
        EXPECT_EQ(static_cast<std::uint64_t>(*last.operands[0].value), by_id[e.dst]->start_address);
      }
    }
    for (auto [id, degree] : out_degree) {
      if (classify_transfer(by_id[id]->instructions.back().mnemonic) ==
          TransferKind::conditional_jump) {
        EXPECT_LE(degree, 2);
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, SegmentProperties, ::testing::Values(21u, 22u, 23u, 24u));

}  // namespace
}  // namespace ddghash
