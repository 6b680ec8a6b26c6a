#include <gtest/gtest.h>

#include <sstream>

#include "shapeasm/io.hpp"
#include "support/support.hpp"

using namespace shapeasm;

TEST(PartGraphJson, RoundTripPreservesBoxes) {
  const PartNode g = graph_from_shape(execute(testsupport::sample_program("chair")));
  const PartNode h = part_graph_from_json(json::parse(part_graph_to_json(g).dump()));
  const auto a = leaf_boxes(g), b = leaf_boxes(h);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto ca = corners(a[i]), cb = corners(b[i]);
    for (int k = 0; k < 8; ++k) EXPECT_LT(norm(ca[k] - cb[k]), 1e-9);
  }
  EXPECT_EQ(count_leaves(h), count_leaves(g));
}

TEST(PartGraphJson, DimsAreInTextOrder) {
  const json j = json::parse(R"({"box": {"dims": [3, 2, 1], "center": [0, 0, 0]}})");
  const Cuboid c = part_graph_from_json(j).box;
  // (l, w, h) -> (x, z, y)
  EXPECT_DOUBLE_EQ(c.dims.x, 3);
  EXPECT_DOUBLE_EQ(c.dims.z, 2);
  EXPECT_DOUBLE_EQ(c.dims.y, 1);
}

TEST(PartGraphJson, MalformedInputIsAFormatError) {
  EXPECT_THROW(part_graph_from_json(json::parse(R"({"id": "x"})")), FormatError);
  EXPECT_THROW(part_graph_from_json(json::parse(R"({"box": {"dims": [1, 0, 1], "center": [0, 0, 0]}})")), FormatError);
  EXPECT_THROW(part_graph_from_json(json::parse(R"({"box": {"dims": [1, 1], "center": [0, 0, 0]}})")), FormatError);
  EXPECT_THROW(part_graph_from_json(json::parse(R"({"box": {"dims": [1, 1, 1], "center": [0, 0, 0], "quat": [0, 0, 0, 0]}})")),
               FormatError);
}

TEST(RulesJson, LoadsCategoryAndRoundTrips) {
  const ExtractionRules r = load_rules(testsupport::data_dir() + "/extraction_rules.json", "table");
  EXPECT_FALSE(r.collapse.empty());
  const ExtractionRules back = rules_from_json(rules_to_json(r));
  EXPECT_EQ(back.collapse, r.collapse);
  EXPECT_EQ(back.flatten, r.flatten);
  EXPECT_EQ(back.label_priority, r.label_priority);
  EXPECT_THROW(load_rules(testsupport::data_dir() + "/extraction_rules.json", "spaceship"), FormatError);
}

TEST(ObjExport, EightVerticesAndTwelveFacesPerLeaf) {
  const auto shape = execute(testsupport::sample_program("chair"));
  std::ostringstream out;
  write_obj(out, shape);
  std::istringstream in(out.str());
  std::string line;
  int v = 0, f = 0;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("f ", 0) == 0) ++f;
  }
  EXPECT_EQ(v, 8 * static_cast<int>(shape.leaves.size()));
  EXPECT_EQ(f, 12 * static_cast<int>(shape.leaves.size()));
}

TEST(ObjExport, TrianglesFaceOutward) {
  const Cuboid c = make_cuboid({1, 2, 3}, {0.5, 0, 0});
  const auto pts = corners(c);
  for (const auto& t : box_triangles()) {
    const Vec3d n = cross(pts[t[1]] - pts[t[0]], pts[t[2]] - pts[t[0]]);
    const Vec3d mid = (pts[t[0]] + pts[t[1]] + pts[t[2]]) / 3.0;
    EXPECT_GT(dot(n, mid - c.pose.center), 0.0);
  }
}

TEST(TraceExport, OneLinePerStep) {
  ExecOptions opt;
  opt.record_trace = true;
  const auto shape = execute(testsupport::sample_program("lounge"), opt);
  std::ostringstream out;
  write_trace_jsonl(out, shape.trace);
  std::istringstream in(out.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    EXPECT_TRUE(j.contains("cuboids"));
    ++n;
  }
  EXPECT_EQ(n, shape.trace.size());
}

TEST(ReportJson, StabilityAndValidationFields) {
  const json s = to_json(stability(testsupport::leaves_of(testsupport::sample_program("table"))));
  for (const char* k : {"rooted", "stable", "support_polygon", "com", "margin"}) EXPECT_TRUE(s.contains(k)) << k;
  ValidationReport r;
  r.reasons = {"fscore"};
  EXPECT_EQ(to_json(r)["reasons"][0], "fscore");
}
