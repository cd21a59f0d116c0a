/*
 * Copyright 2026 The gprlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "gprlab/csbm.hpp"
#include "gprlab/dataset_io.hpp"
#include "gprlab/dense_matrix.hpp"
#include "gprlab/error.hpp"
#include "gprlab/experiment.hpp"
#include "gprlab/graph.hpp"
#include "gprlab/model.hpp"
#include "gprlab/optimizer.hpp"
#include "gprlab/oversmoothing.hpp"
#include "gprlab/report.hpp"
#include "gprlab/rng.hpp"
#include "gprlab/spectral.hpp"
#include "gprlab/spmm.hpp"
#include "gprlab/svg.hpp"
#include "gprlab/symmetric_eigen.hpp"
