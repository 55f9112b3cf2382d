#pragma once

// Umbrella header.

#include "control.hpp"
#include "error.hpp"
#include "fem.hpp"
#include "geometry.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "mesh.hpp"
#include "quadrature.hpp"
#include "singular.hpp"
