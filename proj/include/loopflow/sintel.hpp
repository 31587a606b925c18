// Copyright 2026 The loopflow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Sintel-layout frame pairs:
//
//   <dir>/frame_0001.png, <dir>/frame_0002.png
//   <dir>/flow/frame_0001.flo          (optional)
//   <dir>/occlusions/frame_0001.png    (optional, 0 = occluded)

#pragma once

#include <filesystem>
#include <string>

#include "loopflow/flo_io.hpp"
#include "loopflow/pipeline.hpp"
#include "loopflow/png_io.hpp"
#include "loopflow/viz.hpp"

namespace loopflow {

inline FramePair load_sintel_pair(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  FramePair p;
  p.frame0 = read_gray_png((dir / "frame_0001.png").string());
  p.frame1 = read_gray_png((dir / "frame_0002.png").string());
  require_same_dims(p.frame0.dims(), p.frame1.dims(), "sintel frames");
  const fs::path flo = dir / "flow" / "frame_0001.flo";
  if (fs::exists(flo)) {
    p.gt_flow = flo_read(flo.string());
    require_same_dims(p.gt_flow->dims(), p.frame0.dims(), "sintel flow");
  }
  const fs::path occ = dir / "occlusions" / "frame_0001.png";
  if (fs::exists(occ)) {
    Image8 mask = read_png(occ.string());
    if (mask.channels != 1) mask = to_gray8(to_scalar(mask));
    p.gt_occlusion = mask_to_occlusion(mask, p.gt_flow ? &*p.gt_flow : nullptr);
  }
  return p;
}

}  // namespace loopflow
