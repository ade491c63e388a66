#pragma once

#include "analysis.hpp"
#include "bbob.hpp"
#include "core.hpp"
#include "design.hpp"
#include "ela.hpp"
#include "external.hpp"
#include "gp.hpp"
#include "hpo.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "optimizers.hpp"
#include "pipeline.hpp"
