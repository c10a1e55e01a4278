#pragma once

#include "fedloc/baseline.hpp"
#include "fedloc/client.hpp"
#include "fedloc/common.hpp"
#include "fedloc/datagen.hpp"
#include "fedloc/diagnostics.hpp"
#include "fedloc/experiment.hpp"
#include "fedloc/model.hpp"
#include "fedloc/orchestrator.hpp"
#include "fedloc/rng.hpp"
#include "fedloc/server.hpp"
#include "fedloc/smoothing.hpp"
