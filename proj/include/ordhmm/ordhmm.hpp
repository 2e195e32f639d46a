#pragma once

#include "ordhmm/config.hpp"
#include "ordhmm/diagnostics.hpp"
#include "ordhmm/emission.hpp"
#include "ordhmm/error.hpp"
#include "ordhmm/exact_bayes.hpp"
#include "ordhmm/forward.hpp"
#include "ordhmm/gibbs.hpp"
#include "ordhmm/model.hpp"
#include "ordhmm/numeric.hpp"
#include "ordhmm/ordered.hpp"
#include "ordhmm/permutation.hpp"
#include "ordhmm/relabel.hpp"
#include "ordhmm/rng.hpp"
