// Copyright (c) 2026, The denoise-seg Authors. All rights reserved.
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

#pragma once

#include "denoise_seg/balanced_sampler.hpp"
#include "denoise_seg/checkpoint.hpp"
#include "denoise_seg/config.hpp"
#include "denoise_seg/dataset_io.hpp"
#include "denoise_seg/dual_stream_model.hpp"
#include "denoise_seg/error.hpp"
#include "denoise_seg/losses_metrics.hpp"
#include "denoise_seg/mask_sampler.hpp"
#include "denoise_seg/morphology.hpp"
#include "denoise_seg/noise_forge.hpp"
#include "denoise_seg/raster.hpp"
#include "denoise_seg/raster_io.hpp"
#include "denoise_seg/report.hpp"
#include "denoise_seg/synth_data.hpp"
#include "denoise_seg/trainer.hpp"
