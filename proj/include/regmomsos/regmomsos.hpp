#pragma once

#include "regmomsos/basis1d.hpp"
#include "regmomsos/benchmarks.hpp"
#include "regmomsos/bm_constants.hpp"
#include "regmomsos/conic/cones.hpp"
#include "regmomsos/conic/program.hpp"
#include "regmomsos/conic/solver.hpp"
#include "regmomsos/hierarchy.hpp"
#include "regmomsos/moment_sos.hpp"
#include "regmomsos/multi_index.hpp"
#include "regmomsos/oracle.hpp"
#include "regmomsos/poly.hpp"
#include "regmomsos/problem_file.hpp"
