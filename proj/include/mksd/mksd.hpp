#pragma once

#include "mksd/errors.hpp"
#include "mksd/rng.hpp"
#include "mksd/manifold.hpp"
#include "mksd/model.hpp"
#include "mksd/kernel.hpp"
#include "mksd/stein.hpp"
#include "mksd/sampling.hpp"
#include "mksd/gof.hpp"
#include "mksd/criticism.hpp"
#include "mksd/efficiency.hpp"
#include "mksd/io.hpp"
#include "mksd/specs.hpp"
