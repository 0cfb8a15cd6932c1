// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "subband/checkpoint.hpp"
#include "subband/config.hpp"
#include "subband/cost.hpp"
#include "subband/dataset.hpp"
#include "subband/image_io.hpp"
#include "subband/layers.hpp"
#include "subband/model.hpp"
#include "subband/optimizer.hpp"
#include "subband/quantize.hpp"
#include "subband/tensor.hpp"
#include "subband/tensor_io.hpp"
#include "subband/train.hpp"
#include "subband/wavelet.hpp"
