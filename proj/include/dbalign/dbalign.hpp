#pragma once

#include "dbalign/assignment.hpp"
#include "dbalign/config.hpp"
#include "dbalign/detectors.hpp"
#include "dbalign/error.hpp"
#include "dbalign/experiments.hpp"
#include "dbalign/exponents.hpp"
#include "dbalign/io.hpp"
#include "dbalign/models.hpp"
#include "dbalign/plan.hpp"
#include "dbalign/report.hpp"
#include "dbalign/rng.hpp"
#include "dbalign/spectral.hpp"
