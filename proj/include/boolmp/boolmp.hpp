#pragma once

// Boolean matrix factorization and noisy completion by message passing on a
// factor graph, with an exhaustive oracle, synthetic phase-sweep harness and
// text-format ingestion. Umbrella header.

#include "boolmp/bool_matrix.hpp"
#include "boolmp/core.hpp"
#include "boolmp/io.hpp"
#include "boolmp/map_engine.hpp"
#include "boolmp/messages.hpp"
#include "boolmp/model.hpp"
#include "boolmp/oracle.hpp"
#include "boolmp/parallel.hpp"
#include "boolmp/random.hpp"
#include "boolmp/sum_product.hpp"
#include "boolmp/synth.hpp"
