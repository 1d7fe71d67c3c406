#pragma once

#include "evtmargin/analytics.hpp"
#include "evtmargin/config.hpp"
#include "evtmargin/extremes.hpp"
#include "evtmargin/gev.hpp"
#include "evtmargin/margins.hpp"
#include "evtmargin/normal.hpp"
#include "evtmargin/pipeline.hpp"
#include "evtmargin/timeseries.hpp"
#include "evtmargin/types.hpp"
#include "evtmargin/version.hpp"
