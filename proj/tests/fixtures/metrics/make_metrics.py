#!/usr/bin/env python3
"""Regenerates the rootedness/stability fixtures and their expected labels.

Each fixture is a flat part graph. Shapes are sized so that the 2% contact
tolerance (of the leaf bounding-box diagonal) is about 0.035.
"""
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def box(sx, sy, sz, cx, cy, cz):
    # part-graph dims are (l, w, h) = (x, z, y) extents
    return {"dims": [sx, sz, sy], "center": [cx, cy, cz], "quat": [1, 0, 0, 0]}


def table(top_gap=0.0):
    legs = [box(0.1, 0.9, 0.1, x, 0.45, z) for x in (-0.45, 0.45) for z in (-0.45, 0.45)]
    top = box(1.0, 0.1, 1.0, 0.0, 0.95 + top_gap, 0.0)
    return legs + [top]


FIXTURES = {
    "table": (table(), True, True),
    "table_gap_within_tolerance": (table(0.01), True, True),
    "table_gap_beyond_tolerance": (table(0.08), False, False),
    "floating_part": (table() + [box(0.2, 0.2, 0.2, 0.0, 0.5, 0.0)], False, False),
    "overhanging_arm": ([box(0.1, 1.0, 0.1, 0.0, 0.5, 0.0), box(1.0, 0.2, 0.3, 0.55, 0.9, 0.0)], True, False),
    "pole_on_foot": ([box(0.6, 0.05, 0.6, 0.0, 0.025, 0.0), box(0.05, 1.0, 0.05, 0.0, 0.55, 0.0),
                      box(0.4, 0.05, 0.4, 0.0, 1.075, 0.0)], True, True),
    "single_edge_support": ([box(0.05, 1.0, 1.0, 0.0, 0.5, 0.0)], True, True),
    "slab_on_post_edge": ([box(0.1, 0.5, 0.1, 0.0, 0.25, 0.0), box(1.0, 0.1, 0.4, 0.45, 0.55, 0.0)], True, False),
}


def main():
    expected = {}
    for name, (leaves, rooted, stable) in FIXTURES.items():
        g = {"id": "root", "label": "root",
             "box": box(1.0, 1.0, 1.0, 0.0, 0.5, 0.0),
             "children": [{"id": f"p{i}", "label": "part", "box": b, "children": []} for i, b in enumerate(leaves)]}
        with open(os.path.join(HERE, name + ".json"), "w") as f:
            json.dump(g, f, indent=1)
            f.write("\n")
        expected[name] = {"rooted": rooted, "stable": stable}
    with open(os.path.join(HERE, "expected.json"), "w") as f:
        json.dump(expected, f, indent=1, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
