#pragma once

#include "leco/advisor.hpp"
#include "leco/baselines.hpp"
#include "leco/bench.hpp"
#include "leco/bits.hpp"
#include "leco/codec.hpp"
#include "leco/datasets.hpp"
#include "leco/error.hpp"
#include "leco/format.hpp"
#include "leco/model.hpp"
#include "leco/partitioner.hpp"
#include "leco/regressor.hpp"
#include "leco/strings.hpp"
