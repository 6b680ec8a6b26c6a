#include <gtest/gtest.h>

#include "support/support.hpp"

using namespace shapeasm;
using testsupport::sample_program;
using testsupport::sample_program_names;

namespace {

const char* kSimple =
    "bbox = Cuboid(1, 1, 1, True)\n"
    "cube0 = Cuboid(0.5, 0.5, 0.5, True)\n"
    "attach(cube0, bbox, 0.5, 0, 0.5, 0.5, 0, 0.5)\n";

ParseErrorKind parse_kind(const std::string& text) {
  try {
    parse_program(text);
  } catch (const ParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a parse error for:\n" << text;
  return ParseErrorKind::Syntax;
}

// Plain dynamic-programming edit distance kept separate from the library.
int reference_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
  return d[a.size()][b.size()];
}

}  // namespace

TEST(Parser, SimpleProgram) {
  const Program p = parse_program(kSimple);
  EXPECT_EQ(p.bbox.name, "bbox");
  EXPECT_EQ(p.cuboids.size(), 1u);
  EXPECT_EQ(p.attaches.size(), 1u);
  EXPECT_TRUE(p.symmetries.empty());
  EXPECT_EQ(p.line_count(), 3);
  const auto& a = std::get<Attach<double>>(p.attaches[0]);
  EXPECT_EQ(a.c1, "cube0");
  EXPECT_EQ(a.c2, "bbox");
  EXPECT_DOUBLE_EQ(a.p1.x, 0.5);
  EXPECT_DOUBLE_EQ(a.p2.y, 0.0);
}

TEST(Parser, DimensionsFollowTextOrder) {
  const Program p = parse_program("bbox = Cuboid(1, 2, 3, True)\ncube0 = Cuboid(0.1, 0.2, 0.3, False)\n");
  EXPECT_DOUBLE_EQ(p.bbox.l, 1);
  EXPECT_DOUBLE_EQ(p.bbox.w, 2);
  EXPECT_DOUBLE_EQ(p.bbox.h, 3);
  // Geometry order (x, y, z) = (l, h, w).
  EXPECT_DOUBLE_EQ(p.bbox.dims().y, 3);
  EXPECT_FALSE(p.cuboids[0].aligned);
}

TEST(Parser, SqueezeWithLeadingDotNumbers) {
  const Program p = parse_program(
      "bbox = Cuboid(1, 1, 1, True)\ncube0 = Cuboid(0.5, 0.5, 0.5, True)\ncube1 = Cuboid(0.5, 0.5, 0.5, True)\n"
      "squeeze(cube1, bbox, bbox, top, .5, .5)\n");
  const auto& s = std::get<Squeeze<double>>(p.attaches[0]);
  EXPECT_EQ(s.face, Face::Top);
  EXPECT_DOUBLE_EQ(s.u, 0.5);
  EXPECT_DOUBLE_EQ(s.v, 0.5);
  EXPECT_EQ(s.c2, "bbox");
}

TEST(Parser, MacrosAndHierarchy) {
  const Program p = sample_program("chair");
  ASSERT_EQ(p.children.size(), 1u);
  EXPECT_EQ(p.children[0].owner, "cube3");
  EXPECT_EQ(p.symmetries.size(), 2u);
  const auto& t = std::get<Translate<double>>(p.children[0].symmetries[0]);
  EXPECT_EQ(t.axis, Axis::Y);
  EXPECT_EQ(t.m, 2);
  EXPECT_DOUBLE_EQ(t.d, 0.5);
}

TEST(Parser, Errors) {
  EXPECT_EQ(parse_kind("bbox = Cuboid(1, 1, 1, True)\ncube0 = Cuboid(1, 1, 1, True)\n"
                       "cube1 = Cuboid(1, 1, 1, True)\nattach(cube4, bbox, 0, 0, 0, 0, 0, 0)\n"),
            ParseErrorKind::Undeclared);
  EXPECT_EQ(parse_kind("bbox = Cuboid(1, 1, 1, True)\ncube0 = Cuboid(1, 1, True)\n"), ParseErrorKind::Arity);
  EXPECT_EQ(parse_kind("bbox = Cuboid(1, 1, 1, True)\ncube0 = Cuboid(1, 1, 1, True)\nattach(cube0, bbox, 0, 0, 0)\n"),
            ParseErrorKind::Arity);
  EXPECT_EQ(parse_kind("bbox = Cuboid(1, 1, 1, True) $\n"), ParseErrorKind::Lexical);
  EXPECT_EQ(parse_kind("cube0 = Cuboid(1, 1, 1, True)\n"), ParseErrorKind::BlockOrder);
  EXPECT_EQ(parse_kind(testsupport::slurp(testsupport::fixture_dir() + "/semantics/block-order.sa")),
            ParseErrorKind::BlockOrder);
  EXPECT_EQ(parse_kind("bbox = Cuboid(1, 1, 1, True)\ncube0 = Cuboid(1, 1, 1, True)\ncube0 = Cuboid(1, 1, 1, True)\n"),
            ParseErrorKind::Duplicate);
  EXPECT_EQ(parse_kind("bbox = Cuboid(1, 1, 1, True)\ncube0 = Cuboid(1, 1, 1, True)\n"
                       "squeeze(cube0, bbox, bbox, sideways, 0.5, 0.5)\n"),
            ParseErrorKind::Syntax);
}

TEST(Parser, ErrorsCarryLineAndColumn) {
  try {
    parse_program("bbox = Cuboid(1, 1, 1, True)\ncube0 = Cuboid(1, 1, 1, True)\nattach(cube0, cube9, 0, 0, 0, 0, 0, 0)\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 15);
  }
}

TEST(Printer, ThreeDecimalNumerals) {
  EXPECT_EQ(format_number(0.5), "0.500");
  EXPECT_EQ(format_number(-0.0), "0.000");
  EXPECT_EQ(print_program(parse_program(kSimple)),
            "bbox = Cuboid(1.000, 1.000, 1.000, True)\n"
            "cube0 = Cuboid(0.500, 0.500, 0.500, True)\n"
            "attach(cube0, bbox, 0.500, 0.000, 0.500, 0.500, 0.000, 0.500)\n");
}

TEST(Printer, RoundTripOnSamplesAndFixtures) {
  for (const auto& name : sample_program_names()) {
    const std::string text = print_program(sample_program(name));
    EXPECT_EQ(print_program(parse_program(text)), text) << name;
  }
  for (const char* f : {"valid", "coord-range", "dim-range", "single-attach", "containment"}) {
    const std::string text = print_program(
        testsupport::load_program(testsupport::fixture_dir() + "/semantics/" + std::string(f) + ".sa"));
    EXPECT_EQ(print_program(parse_program(text)), text) << f;
  }
}

TEST(Printer, HierarchyPrintsRootThenChildren) {
  const std::string text = print_program(sample_program("chair"));
  const auto child = text.find("Program cube3:\n");
  ASSERT_NE(child, std::string::npos);
  EXPECT_GT(child, text.find("reflect(cube2, X)"));
  EXPECT_NE(text.find("\n    squeeze(cube2, cube0, cube1, left, 0.300, 0.500)\n"), std::string::npos);
}

TEST(EditDistance, SingleEditsAndAddedAttach) {
  const Program a = sample_program("table");
  EXPECT_EQ(token_edit_distance(a, a), 0);
  Program b = a;
  b.cuboids[0].h += 0.25;
  EXPECT_EQ(token_edit_distance(a, b), 1);
  Program c = a;
  c.attaches.push_back(Attach<double>{c.cuboids.back().name, c.cuboids.front().name, {0.5, 0, 0.5}, {0.2, 1, 0.3}});
  EXPECT_EQ(token_edit_distance(a, c), 10);
}

TEST(EditDistance, MatchesReferenceImplementation) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    const Program a = testsupport::random_program(rng), b = testsupport::random_program(rng);
    EXPECT_EQ(token_edit_distance(a, b), reference_distance(program_tokens(a), program_tokens(b)));
  }
}

TEST(Stats, HandCountedChair) {
  const ProgramStats s = program_stats(sample_program("chair"));
  // Root: bbox, 4 cuboids, 5 attaches, 2 reflects. Child: bbox, 3 cuboids,
  // 2 attaches, 1 squeeze, 1 translate.
  EXPECT_EQ(s.line_count, 20);
  EXPECT_EQ(s.reflect_lines, 2);
  EXPECT_DOUBLE_EQ(s.reflect_rate, 0.10);
  EXPECT_DOUBLE_EQ(s.translate_rate, 0.05);
  EXPECT_DOUBLE_EQ(s.squeeze_rate, 0.05);
  EXPECT_DOUBLE_EQ(s.total_macro_rate, 0.20);
  EXPECT_EQ(s.leaf_cuboid_count, 6);
}

TEST(Stats, MacroFreeProgramHasZeroRates) {
  const ProgramStats s = program_stats(expand_program(sample_program("chair")));
  EXPECT_EQ(s.reflect_rate, 0.0);
  EXPECT_EQ(s.translate_rate, 0.0);
  EXPECT_EQ(s.squeeze_rate, 0.0);
}

TEST(Signature, IgnoresContinuousValues) {
  const Program a = sample_program("table");
  Program b = a;
  b.cuboids[1].h *= 1.3;
  EXPECT_EQ(structural_signature(a), structural_signature(b));
  Program c = a;
  c.attaches.push_back(Attach<double>{c.cuboids.back().name, c.cuboids.front().name, {0.5, 0, 0.5}, {0.2, 1, 0.3}});
  EXPECT_NE(structural_signature(a), structural_signature(c));
}

TEST(Params, GetSetRoundTrip) {
  const Program p = sample_program("chair");
  std::vector<double> x = get_params(p);
  const auto infos = param_infos(p);
  ASSERT_EQ(x.size(), infos.size());
  for (double& v : x) v += 0.001;
  Program q = p;
  set_params(q, x);
  EXPECT_EQ(get_params(q), x);
  EXPECT_EQ(structural_signature(p), structural_signature(q));
}
