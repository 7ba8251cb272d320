#ifndef DIVW_DIVW_HPP
#define DIVW_DIVW_HPP

#include "divw/analysis.hpp"
#include "divw/data_model.hpp"
#include "divw/error.hpp"
#include "divw/estimators.hpp"
#include "divw/genotype.hpp"
#include "divw/numerics.hpp"
#include "divw/rng.hpp"
#include "divw/selection.hpp"
#include "divw/simulation.hpp"
#include "divw/theory.hpp"

#endif
