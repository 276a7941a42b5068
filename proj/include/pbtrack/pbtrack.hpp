// Umbrella header.
#pragma once

#include "pbtrack/checks.hpp"
#include "pbtrack/config.hpp"
#include "pbtrack/csv_io.hpp"
#include "pbtrack/dynamics.hpp"
#include "pbtrack/energy.hpp"
#include "pbtrack/errors.hpp"
#include "pbtrack/models.hpp"
#include "pbtrack/path.hpp"
#include "pbtrack/reference.hpp"
#include "pbtrack/sim.hpp"
#include "pbtrack/sync.hpp"
