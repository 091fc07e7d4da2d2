#pragma once

#include "ripsel/ard.hpp"
#include "ripsel/benchmark.hpp"
#include "ripsel/dataset.hpp"
#include "ripsel/error.hpp"
#include "ripsel/missingness.hpp"
#include "ripsel/pca.hpp"
#include "ripsel/pipeline.hpp"
#include "ripsel/ripper.hpp"
#include "ripsel/synthetic.hpp"
