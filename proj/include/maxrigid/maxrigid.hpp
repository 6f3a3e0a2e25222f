#pragma once

#include "maxrigid/conic_audit.hpp"
#include "maxrigid/conic_problem.hpp"
#include "maxrigid/conic_solver.hpp"
#include "maxrigid/degeneracy.hpp"
#include "maxrigid/error.hpp"
#include "maxrigid/evaluation.hpp"
#include "maxrigid/geometry.hpp"
#include "maxrigid/grid.hpp"
#include "maxrigid/neighbor_graph.hpp"
#include "maxrigid/pipeline.hpp"
#include "maxrigid/problem.hpp"
#include "maxrigid/problem_format.hpp"
#include "maxrigid/psd.hpp"
#include "maxrigid/random.hpp"
#include "maxrigid/reconstruction.hpp"
#include "maxrigid/report_io.hpp"
#include "maxrigid/sequence.hpp"
#include "maxrigid/sequence_io.hpp"
#include "maxrigid/solution.hpp"
#include "maxrigid/synth.hpp"
