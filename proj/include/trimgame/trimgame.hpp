#pragma once

#include "trimgame/core.hpp"
#include "trimgame/engine.hpp"
#include "trimgame/harness.hpp"
#include "trimgame/metrics.hpp"
#include "trimgame/privacy.hpp"
#include "trimgame/rng.hpp"
#include "trimgame/strategies.hpp"
#include "trimgame/theory.hpp"
