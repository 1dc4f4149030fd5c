#pragma once

#include "shrinkdet/core.hpp"
#include "shrinkdet/quant.hpp"
#include "shrinkdet/codec.hpp"
#include "shrinkdet/semantic.hpp"
#include "shrinkdet/metrics.hpp"
#include "shrinkdet/detect.hpp"
#include "shrinkdet/datasets.hpp"
