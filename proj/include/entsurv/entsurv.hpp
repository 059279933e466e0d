#pragma once

#include "entsurv/mdp.hpp"
#include "entsurv/graph.hpp"
#include "entsurv/linalg.hpp"
#include "entsurv/chain.hpp"
#include "entsurv/lp.hpp"
#include "entsurv/entropy_program.hpp"
#include "entsurv/unconstrained.hpp"
#include "entsurv/constrained.hpp"
#include "entsurv/simulation.hpp"
#include "entsurv/workspace.hpp"
#include "entsurv/io.hpp"
#include "entsurv/report.hpp"
