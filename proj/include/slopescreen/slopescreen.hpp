#pragma once

#include "slopescreen/bench.hpp"
#include "slopescreen/core.hpp"
#include "slopescreen/dual.hpp"
#include "slopescreen/io.hpp"
#include "slopescreen/rng.hpp"
#include "slopescreen/screening.hpp"
#include "slopescreen/solver.hpp"
