#pragma once

// Built-in closed-form example geometries with their expected properties.

#include <memory>
#include <string>
#include <vector>

#include "harmsec/sections.hpp"

namespace harmsec {

struct NamedSection {
  std::string name;
  std::vector<std::string> components;
};

/// An expected property. `basis` is "stated" for properties claimed for the
/// family, "elementary" for immediate consequences of the construction and
/// "computed" for values fixed by an independent calculation.
struct Expectation {
  std::string property;
  std::string expected;
  std::string basis;
};

struct GalleryEntry {
  std::string name;
  std::string description;
  std::string source;
  std::shared_ptr<const SubmersionSpace> space;
  std::vector<NamedSection> sections;
  std::vector<Expectation> expectations;
  double perturbation = 0.0;

  Section section(std::string_view name) const;
  Section section(std::size_t index) const;
};

/// Names accepted by instantiate: the four listed families plus
/// "product_s1", the product over a flat circle used by the flow solver.
const std::vector<std::string>& gallery_names();
bool gallery_listed(std::string_view name);

GalleryEntry instantiate(std::string_view name);
/// Adds eps to one diagonal connection coefficient so check_affine (product,
/// tangent_bundle_flat) or check_skew (hopf, blumenthal_flat) fails.
GalleryEntry broken_variant(std::string_view name, double eps);

/// Builds a section from expression strings over the base coordinates.
Section make_section(std::shared_ptr<const SubmersionSpace> space, const std::vector<std::string>& components,
                     std::string name = "");

}  // namespace harmsec
