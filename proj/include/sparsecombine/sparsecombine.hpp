#pragma once

#include "sparsecombine/convergence.hpp"
#include "sparsecombine/errors.hpp"
#include "sparsecombine/evaluate.hpp"
#include "sparsecombine/grid.hpp"
#include "sparsecombine/pde.hpp"
#include "sparsecombine/plan.hpp"
#include "sparsecombine/rational.hpp"
#include "sparsecombine/sine_transform.hpp"
#include "sparsecombine/study.hpp"
#include "sparsecombine/verify.hpp"
