// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dce/analysis.hpp"
#include "dce/channel.hpp"
#include "dce/distributed.hpp"
#include "dce/estimators.hpp"
#include "dce/experiment.hpp"
#include "dce/io.hpp"
#include "dce/netsim.hpp"
#include "dce/numerics.hpp"
#include "dce/payload.hpp"
#include "dce/rng.hpp"
