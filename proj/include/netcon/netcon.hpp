#pragma once

#include "netcon/bubblesort.hpp"
#include "netcon/engine.hpp"
#include "netcon/harness/results.hpp"
#include "netcon/harness/runners.hpp"
#include "netcon/harness/stats.hpp"
#include "netcon/harness/sweep.hpp"
#include "netcon/harness/verify.hpp"
#include "netcon/protocols/compose.hpp"
#include "netcon/protocols/leader_clock.hpp"
#include "netcon/protocols/leader_election.hpp"
#include "netcon/protocols/line_formation.hpp"
#include "netcon/protocols/matching_clock.hpp"
#include "netcon/protocols/periodic_clock.hpp"
#include "netcon/protocols/pipeline.hpp"
#include "netcon/protocols/predicates.hpp"
#include "netcon/replication.hpp"
#include "netcon/rng.hpp"
