#pragma once

// Umbrella header.

#include "covsel/chordal.hpp"
#include "covsel/counts.hpp"
#include "covsel/graph.hpp"
#include "covsel/harness.hpp"
#include "covsel/hiw.hpp"
#include "covsel/io.hpp"
#include "covsel/linalg.hpp"
#include "covsel/priors.hpp"
#include "covsel/rng.hpp"
#include "covsel/sampler.hpp"
