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


// Umbrella header for the core library. I/O headers that need libpng
// (png_io.hpp, sintel.hpp) are included separately.

#pragma once

#include "loopflow/core.hpp"
#include "loopflow/features.hpp"
#include "loopflow/flo_io.hpp"
#include "loopflow/image.hpp"
#include "loopflow/loopback.hpp"
#include "loopflow/matching.hpp"
#include "loopflow/metrics.hpp"
#include "loopflow/pipeline.hpp"
#include "loopflow/refine.hpp"
#include "loopflow/rotation.hpp"
#include "loopflow/scene_io.hpp"
#include "loopflow/scenes.hpp"
#include "loopflow/viz.hpp"
