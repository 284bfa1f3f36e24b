#pragma once

#include "dsp/banded.hpp"
#include "dsp/dataset.hpp"
#include "dsp/dsp_core.hpp"
#include "dsp/error.hpp"
#include "dsp/inference.hpp"
#include "dsp/models.hpp"
#include "dsp/omori.hpp"
#include "dsp/report.hpp"
#include "dsp/rng.hpp"
#include "dsp/special_dists.hpp"
