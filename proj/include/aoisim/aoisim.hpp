#pragma once

#include "aoisim/channel.hpp"
#include "aoisim/cli.hpp"
#include "aoisim/config.hpp"
#include "aoisim/equalize.hpp"
#include "aoisim/fbl.hpp"
#include "aoisim/fdma.hpp"
#include "aoisim/harness.hpp"
#include "aoisim/linalg.hpp"
#include "aoisim/rng.hpp"
#include "aoisim/sdr.hpp"
#include "aoisim/tdma.hpp"
#include "aoisim/validate.hpp"
