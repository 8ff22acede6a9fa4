// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "motif/adam.hpp"
#include "motif/checkpoint.hpp"
#include "motif/config.hpp"
#include "motif/data.hpp"
#include "motif/distance.hpp"
#include "motif/edit_tree.hpp"
#include "motif/errors.hpp"
#include "motif/modules.hpp"
#include "motif/motifnet.hpp"
#include "motif/params.hpp"
#include "motif/reference_dp.hpp"
#include "motif/sequence.hpp"
#include "motif/tensor.hpp"
#include "motif/training.hpp"
