#pragma once

#include "dutycycle/datamodel.hpp"
#include "dutycycle/csv_io.hpp"
#include "dutycycle/synth.hpp"
#include "dutycycle/features.hpp"
#include "dutycycle/balance.hpp"
#include "dutycycle/model.hpp"
#include "dutycycle/grid_search.hpp"
#include "dutycycle/pipeline.hpp"
#include "dutycycle/evaluate.hpp"
#include "dutycycle/experiment.hpp"
#include "dutycycle/streaming.hpp"
#include "dutycycle/model_io.hpp"
#include "dutycycle/agreement.hpp"
#include "dutycycle/manifest.hpp"
