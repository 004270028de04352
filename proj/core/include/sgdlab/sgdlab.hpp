#pragma once

#include "sgdlab/baselines.hpp"
#include "sgdlab/bounds.hpp"
#include "sgdlab/distribution.hpp"
#include "sgdlab/numerics.hpp"
#include "sgdlab/operator_calculus.hpp"
#include "sgdlab/sgd_engine.hpp"
#include "sgdlab/spectrum.hpp"
