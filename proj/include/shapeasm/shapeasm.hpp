#pragma once

// Umbrella header. io.hpp is left out because it needs nlohmann/json on the
// include path; include it explicitly where JSON is wanted.

#include "shapeasm/autodiff.hpp"
#include "shapeasm/export.hpp"
#include "shapeasm/extraction.hpp"
#include "shapeasm/fitting.hpp"
#include "shapeasm/geometry.hpp"
#include "shapeasm/gradcheck.hpp"
#include "shapeasm/interpreter.hpp"
#include "shapeasm/metrics.hpp"
#include "shapeasm/parser.hpp"
#include "shapeasm/part_graph.hpp"
#include "shapeasm/point_cloud.hpp"
#include "shapeasm/printer.hpp"
#include "shapeasm/program.hpp"
#include "shapeasm/program_tools.hpp"
#include "shapeasm/scalar.hpp"
#include "shapeasm/semantics.hpp"
