#pragma once

#include "noma/asymptotic.hpp"
#include "noma/channel.hpp"
#include "noma/config.hpp"
#include "noma/constellation.hpp"
#include "noma/csv.hpp"
#include "noma/errors.hpp"
#include "noma/optimizer.hpp"
#include "noma/parallel.hpp"
#include "noma/pep.hpp"
#include "noma/quadrature.hpp"
#include "noma/report.hpp"
#include "noma/sim.hpp"
#include "noma/special.hpp"
