// Copyright 2026 The GraspStab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Physical attributes of the 22 benchmark objects (A0..F6).

#ifndef GRASPSTAB_CATALOG_H_
#define GRASPSTAB_CATALOG_H_

#include <span>
#include <string>
#include <string_view>

#include "graspstab/math.h"

namespace graspstab {

// Values as published: size in millimeters, mass in grams, hand-object
// friction coefficient.
struct CatalogEntry {
  std::string_view id;
  double size_mm[3];
  double mass_g;
  double friction;
  // Set when the published value looks inconsistent with the other rows.
  std::string_view warning;

  Vec3 size_m() const {
    return Vec3(size_mm[0], size_mm[1], size_mm[2]) * 1e-3;
  }
  double mass_kg() const { return mass_g * 1e-3; }
};

std::span<const CatalogEntry> Catalog();

// Throws InvalidInput for an unknown id.
const CatalogEntry& LookupCatalog(std::string_view id);

}  // namespace graspstab

#endif  // GRASPSTAB_CATALOG_H_
