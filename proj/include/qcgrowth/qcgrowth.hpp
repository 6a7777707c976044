#pragma once

#include "errors.hpp"
#include "geometry.hpp"
#include "sampling.hpp"
#include "zorich.hpp"
#include "koch.hpp"
#include "mapzoo.hpp"
#include "transform.hpp"
#include "radius.hpp"
#include "analysis.hpp"
#include "asymptotic.hpp"
#include "io.hpp"
