#pragma once

// Umbrella header for the student-simulation library. The live HTTP backend
// is intentionally excluded; include stusim/live_backend.hpp where needed.

#include "stusim/artifacts.hpp"
#include "stusim/errors.hpp"
#include "stusim/evaluate.hpp"
#include "stusim/graph.hpp"
#include "stusim/llm.hpp"
#include "stusim/metrics.hpp"
#include "stusim/pipeline.hpp"
#include "stusim/predict.hpp"
#include "stusim/prompts.hpp"
#include "stusim/prototype.hpp"
#include "stusim/records.hpp"
#include "stusim/simulate.hpp"
#include "stusim/text.hpp"
