#pragma once

// Convenience header pulling in the whole library.

#include "hybridsense/allan.hpp"
#include "hybridsense/atom_interferometer.hpp"
#include "hybridsense/config.hpp"
#include "hybridsense/fusion_sim.hpp"
#include "hybridsense/hybrid_optimizer.hpp"
#include "hybridsense/noise_models.hpp"
#include "hybridsense/omrr_model.hpp"
