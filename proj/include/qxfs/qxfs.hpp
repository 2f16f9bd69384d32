#pragma once

#include "qxfs/bench.hpp"
#include "qxfs/bitmask.hpp"
#include "qxfs/bpso.hpp"
#include "qxfs/chc.hpp"
#include "qxfs/dataset.hpp"
#include "qxfs/error.hpp"
#include "qxfs/experiment.hpp"
#include "qxfs/qx.hpp"
#include "qxfs/random.hpp"
#include "qxfs/rank.hpp"
#include "qxfs/report.hpp"
#include "qxfs/tree.hpp"
