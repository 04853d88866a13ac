#pragma once

// Umbrella header for the garment decluttering library.

#include "declutter/candidates.hpp"
#include "declutter/config.hpp"
#include "declutter/core.hpp"
#include "declutter/geometry.hpp"
#include "declutter/harness.hpp"
#include "declutter/io.hpp"
#include "declutter/policies.hpp"
#include "declutter/predictor.hpp"
#include "declutter/scene.hpp"
#include "declutter/setcover.hpp"
