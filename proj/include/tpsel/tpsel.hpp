#ifndef TPSEL_TPSEL_HPP
#define TPSEL_TPSEL_HPP

// Umbrella header: Bayesian variable selection for linear regression under
// two-piece Normal/Laplace error models with non-local priors.

#include "tpsel/twopiece.hpp"
#include "tpsel/data.hpp"
#include "tpsel/likelihood.hpp"
#include "tpsel/priors.hpp"
#include "tpsel/optimizer.hpp"
#include "tpsel/evidence.hpp"
#include "tpsel/search.hpp"
#include "tpsel/simgen.hpp"

#endif  // TPSEL_TPSEL_HPP
