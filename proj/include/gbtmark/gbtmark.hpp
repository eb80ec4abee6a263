#pragma once

#include "gbtmark/attacks.hpp"
#include "gbtmark/audio.hpp"
#include "gbtmark/benchmark.hpp"
#include "gbtmark/dsp.hpp"
#include "gbtmark/error.hpp"
#include "gbtmark/gbt.hpp"
#include "gbtmark/io.hpp"
#include "gbtmark/metrics.hpp"
#include "gbtmark/watermark.hpp"
