#pragma once

#include "ulrisk/citree.hpp"
#include "ulrisk/ciforest.hpp"
#include "ulrisk/dataset.hpp"
#include "ulrisk/ensemble.hpp"
#include "ulrisk/geospatial.hpp"
#include "ulrisk/riskmap.hpp"
#include "ulrisk/schema.hpp"
#include "ulrisk/synth.hpp"
#include "ulrisk/validation.hpp"
