// centropy.hpp -- umbrella header
#pragma once

#include "centropy/cluster.hpp"
#include "centropy/common.hpp"
#include "centropy/entropy.hpp"
#include "centropy/fbm.hpp"
#include "centropy/moving_average.hpp"
#include "centropy/pipeline.hpp"
#include "centropy/series.hpp"
#include "centropy/stats.hpp"
