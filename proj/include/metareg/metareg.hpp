#pragma once

// Umbrella header for the library (the command-line front end lives in
// metareg/cli.hpp).

#include "metareg/direct_grid.hpp"
#include "metareg/effect_sizes.hpp"
#include "metareg/errors.hpp"
#include "metareg/inference.hpp"
#include "metareg/io/csv.hpp"
#include "metareg/io/fit_json.hpp"
#include "metareg/io/svg.hpp"
#include "metareg/mixture.hpp"
#include "metareg/model_selection.hpp"
#include "metareg/model_spec.hpp"
#include "metareg/nnhm_core.hpp"
#include "metareg/tau_posterior.hpp"
#include "metareg/version.hpp"
