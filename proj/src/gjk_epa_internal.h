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

#ifndef GRASPSTAB_SRC_GJK_EPA_INTERNAL_H_
#define GRASPSTAB_SRC_GJK_EPA_INTERNAL_H_

#include "graspstab/contact.h"

namespace graspstab {

// Like QueryPair, but may stop early once the shapes are known to be more
// than `max_distance` apart; the reported depth is then only a bound.
PairQuery QueryPairBounded(const ConvexShape& a, const Pose& pose_a,
                           const ConvexShape& b, const Pose& pose_b,
                           double max_distance, int body_a, int body_b);

}  // namespace graspstab

#endif  // GRASPSTAB_SRC_GJK_EPA_INTERNAL_H_
