#pragma once

// Umbrella header for the attraction field toolkit.

#include "afm/errors.hpp"
#include "afm/eval.hpp"
#include "afm/field.hpp"
#include "afm/geometry.hpp"
#include "afm/io.hpp"
#include "afm/squeeze.hpp"
#include "afm/synth.hpp"
