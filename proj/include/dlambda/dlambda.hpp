#pragma once

#include "dlambda/config.hpp"
#include "dlambda/coupledwave.hpp"
#include "dlambda/doppler.hpp"
#include "dlambda/errors.hpp"
#include "dlambda/liouville.hpp"
#include "dlambda/parallel.hpp"
#include "dlambda/propagate.hpp"
#include "dlambda/quadrature.hpp"
#include "dlambda/scans.hpp"
#include "dlambda/scheme.hpp"
#include "dlambda/selfcheck.hpp"
