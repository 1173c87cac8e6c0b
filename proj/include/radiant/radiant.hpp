#pragma once

#include "radiant/blowup.hpp"
#include "radiant/config.hpp"
#include "radiant/dimension.hpp"
#include "radiant/duhamel.hpp"
#include "radiant/error.hpp"
#include "radiant/experiment.hpp"
#include "radiant/fd_oracle.hpp"
#include "radiant/field.hpp"
#include "radiant/kernels.hpp"
#include "radiant/norms.hpp"
#include "radiant/parallel.hpp"
#include "radiant/problem.hpp"
#include "radiant/profile.hpp"
#include "radiant/quadrature.hpp"
#include "radiant/riemann.hpp"
#include "radiant/spectral.hpp"
