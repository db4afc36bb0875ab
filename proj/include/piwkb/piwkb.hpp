#pragma once

#include <piwkb/core.hpp>
#include <piwkb/potential.hpp>
#include <piwkb/action.hpp>
#include <piwkb/stokes.hpp>
#include <piwkb/wkb.hpp>
#include <piwkb/bsb.hpp>
#include <piwkb/monodromy.hpp>
#include <piwkb/painleve.hpp>
#include <piwkb/io.hpp>
