#pragma once

// Labelled part hierarchies with oriented boxes, the input of extraction.

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "shapeasm/interpreter.hpp"

namespace shapeasm {

struct PartNode {
  std::string id;
  std::string label;
  Cuboid box;
  std::vector<PartNode> children;

  bool is_leaf() const { return children.empty(); }
};

inline void collect_leaves(const PartNode& n, std::vector<Cuboid>& out) {
  if (n.is_leaf()) {
    out.push_back(n.box);
    return;
  }
  for (const auto& c : n.children) collect_leaves(c, out);
}

inline std::vector<Cuboid> leaf_boxes(const PartNode& root) {
  std::vector<Cuboid> out;
  if (root.is_leaf()) return {root.box};
  for (const auto& c : root.children) collect_leaves(c, out);
  return out;
}

inline int count_leaves(const PartNode& n) {
  if (n.is_leaf()) return 1;
  int k = 0;
  for (const auto& c : n.children) k += count_leaves(c);
  return k;
}

// Labels a node from its execution path ("cube1/cube0"); the default gives
// every part the same label so ordering falls back to centroids.
using PathLabeler = std::function<std::string(const std::string& path)>;

// Builds the part graph of a hierarchically executed program: the root is the
// bbox, internal nodes are cuboids that own sub-programs, leaves are leaves.
inline PartNode graph_from_shape(const ExecutedShape<double>& shape, const PathLabeler& labeler = {}) {
  PartNode root;
  root.id = "root";
  root.label = "root";
  root.box = shape.bbox;
  root.box.aligned = true;
  auto label = [&](const std::string& path) { return labeler ? labeler(path) : std::string("part"); };

  std::map<std::string, const Leaf<double>*> internal;
  for (const auto& n : shape.internal) internal[n.path] = &n;

  // Insert nodes parent-first: internal paths sorted by depth then text.
  std::vector<const Leaf<double>*> all;
  for (const auto& n : shape.internal) all.push_back(&n);
  for (const auto& n : shape.leaves) all.push_back(&n);
  auto depth = [](const std::string& p) { return std::count(p.begin(), p.end(), '/'); };
  std::stable_sort(all.begin(), all.end(), [&](const Leaf<double>* a, const Leaf<double>* b) {
    return depth(a->path) < depth(b->path);
  });
  std::map<std::string, std::vector<int>> where;  // path -> child index chain from root
  for (const Leaf<double>* n : all) {
    const auto cut = n->path.rfind('/');
    PartNode* parent = &root;
    if (cut != std::string::npos) {
      for (int idx : where.at(n->path.substr(0, cut))) parent = &parent->children[idx];
    }
    PartNode node;
    node.id = n->path;
    node.label = label(n->path);
    node.box = n->geom;
    std::vector<int> chain = cut == std::string::npos ? std::vector<int>{} : where.at(n->path.substr(0, cut));
    chain.push_back(static_cast<int>(parent->children.size()));
    parent->children.push_back(std::move(node));
    if (internal.count(n->path)) where[n->path] = chain;
  }
  return root;
}

}  // namespace shapeasm
