#pragma once

#include "qaconv/bound.hpp"
#include "qaconv/dynamics.hpp"
#include "qaconv/error.hpp"
#include "qaconv/experiment.hpp"
#include "qaconv/hash.hpp"
#include "qaconv/ising.hpp"
#include "qaconv/numerics.hpp"
#include "qaconv/reparam.hpp"
#include "qaconv/schedule.hpp"
#include "qaconv/spectrum.hpp"
