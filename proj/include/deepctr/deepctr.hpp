#pragma once

#include "deepctr/async_reader.hpp"
#include "deepctr/checkpoint.hpp"
#include "deepctr/dataio.hpp"
#include "deepctr/errors.hpp"
#include "deepctr/instance.hpp"
#include "deepctr/loss.hpp"
#include "deepctr/metrics.hpp"
#include "deepctr/model.hpp"
#include "deepctr/model_spec.hpp"
#include "deepctr/numerics.hpp"
#include "deepctr/optimizer.hpp"
#include "deepctr/parameters.hpp"
#include "deepctr/report.hpp"
#include "deepctr/rng.hpp"
#include "deepctr/schema.hpp"
#include "deepctr/simulate.hpp"
#include "deepctr/sweep.hpp"
#include "deepctr/tensor.hpp"
#include "deepctr/trainer.hpp"
