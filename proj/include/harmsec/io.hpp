#pragma once

// Geometry definition files (JSON, schema "harmsec-geometry/1").
//
//   {
//     "schema": "harmsec-geometry/1",
//     "name": "...", "description": "...",
//     "base":  {"coordinates": [{"name": "x1", "lo": -3.14, "hi": 3.14, "periodic": true}],
//               "metric": [["1", "0"], ["0", "1"]]},
//     "fiber": {"coordinates": [{"name": "y", "lo": -4, "hi": 4}]},
//     "total_metric": [[...]],                       // needed by from-metric and levi-civita
//     "lift": [["0", "0"]] | "from-metric" | "tangent-bundle",
//     "connection": "levi-civita" | "product" | "horizontal-lift" | {"table": Γ[k][i][j]},
//     "perturbations": [{"upper": "y", "lower": "x1", "eps": 0.1}],
//     "sections": [{"name": "sine", "components": ["sin(x1)"]}]
//   }

#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "harmsec/gallery.hpp"

namespace harmsec {

inline constexpr const char* kGeometrySchema = "harmsec-geometry/1";

struct Geometry {
  std::string name;
  std::string description;
  std::shared_ptr<const SubmersionSpace> space;
  std::vector<NamedSection> sections;
};

/// Throws InvalidGeometry (or the underlying expression error) with the
/// JSON pointer of the first offending field in the message.
Geometry load_geometry(const nlohmann::json& doc);
Geometry load_geometry_text(const std::string& text);
Geometry load_geometry_file(const std::string& path);

Geometry from_gallery(const GalleryEntry& e);

/// Canonical document for a geometry; load_geometry(export_geometry(g))
/// reproduces g exactly.
nlohmann::ordered_json export_geometry(const Geometry& g);

/// A named section of g, or else `selector` read as ';'-separated fibre components.
Section resolve_section(const Geometry& g, const std::string& selector);

}  // namespace harmsec
