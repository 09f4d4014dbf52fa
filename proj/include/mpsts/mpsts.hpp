// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header for the photon-subtracted thermal light toolkit: photon
// statistics, loss evolution, non-Gaussianity measures, Wigner functions,
// homodyne simulation, and maximum-likelihood reconstruction.
#pragma once

#include "mpsts/errors.hpp"
#include "mpsts/estimation.hpp"
#include "mpsts/io.hpp"
#include "mpsts/measures.hpp"
#include "mpsts/numeric.hpp"
#include "mpsts/pnd.hpp"
#include "mpsts/quadrature.hpp"
#include "mpsts/rng.hpp"
#include "mpsts/sampling.hpp"
#include "mpsts/wigner.hpp"
