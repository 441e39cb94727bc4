#pragma once
// Umbrella header.

#include "ctlqr/benchmarks.hpp"
#include "ctlqr/config.hpp"
#include "ctlqr/csv.hpp"
#include "ctlqr/diffusion.hpp"
#include "ctlqr/errors.hpp"
#include "ctlqr/grid.hpp"
#include "ctlqr/integrate.hpp"
#include "ctlqr/ipo.hpp"
#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/oracle.hpp"
#include "ctlqr/policy.hpp"
#include "ctlqr/riccati.hpp"
#include "ctlqr/rng.hpp"
#include "ctlqr/transfer.hpp"
