#pragma once

#include "speechalign/core.hpp"
#include "speechalign/ingest.hpp"
#include "speechalign/metrics.hpp"
#include "speechalign/pipeline.hpp"
#include "speechalign/render.hpp"
#include "speechalign/timeline.hpp"
#include "speechalign/wordmap.hpp"
