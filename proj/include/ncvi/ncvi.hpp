#pragma once

#include "ncvi/space.hpp"
#include "ncvi/sets.hpp"
#include "ncvi/smoothing.hpp"
#include "ncvi/vi_core.hpp"
#include "ncvi/linsolve.hpp"
#include "ncvi/continuation.hpp"
#include "ncvi/problems_io.hpp"
