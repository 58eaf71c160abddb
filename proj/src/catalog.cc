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

#include "graspstab/catalog.h"

#include <array>

namespace graspstab {
namespace {

// A2 is listed at 0.636 g while its near twins A1 and B1 weigh tens of
// grams; it is kept verbatim and flagged.
constexpr std::array<CatalogEntry, 22> kEntries = {{
    {"A0", {67, 67, 72}, 5.1, 0.010, ""},
    {"A1", {49, 49, 77}, 46.7, 0.659, ""},
    {"A2", {50, 50, 77}, 0.636, 0.673,
     "mass 0.636 g is out of line with comparable objects; possible unit slip"},
    {"B0", {64, 28, 131}, 123.9, 0.641, ""},
    {"B1", {48, 48, 77}, 37.5, 0.647, ""},
    {"B2", {30, 30, 48}, 18.3, 0.621, ""},
    {"C0", {50, 50, 50}, 87.1, 0.689, ""},
    {"C1", {29, 29, 29}, 18.9, 0.423, ""},
    {"D0", {40, 40, 40}, 3.0, 0.086, ""},
    {"D1", {66, 66, 66}, 56.2, 0.854, ""},
    {"D2", {48, 48, 48}, 44.8, 0.670, ""},
    {"D3", {48, 48, 24}, 23.4, 0.513, ""},
    {"E0", {152, 152, 20}, 95.8, 0.412, ""},
    {"E1", {100, 100, 3}, 13.7, 0.342, ""},
    {"E2", {80, 80, 2}, 6.4, 0.336, ""},
    {"F0", {10, 10, 300}, 10.9, 0.381, ""},
    {"F1", {50, 50, 162}, 39.8, 0.653, ""},
    {"F2", {30, 58, 245}, 67.8, 0.443, ""},
    {"F3", {23, 23, 75}, 414.2, 0.687, ""},
    {"F4", {25, 25, 76}, 37.1, 0.691, ""},
    {"F5", {29, 29, 75}, 27.2, 0.748, ""},
    {"F6", {23, 23, 75}, 15.9, 0.722, ""},
}};

}  // namespace

std::span<const CatalogEntry> Catalog() { return kEntries; }

const CatalogEntry& LookupCatalog(std::string_view id) {
  for (const CatalogEntry& e : kEntries) {
    if (e.id == id) return e;
  }
  throw InvalidInput("catalog: unknown object id '" + std::string(id) + "'");
}

}  // namespace graspstab
