#pragma once

#include "caputo.hpp"
#include "experiment.hpp"
#include "forward.hpp"
#include "invert.hpp"
#include "io.hpp"
#include "mesh.hpp"
#include "param.hpp"
#include "regpen.hpp"
#include "synth.hpp"
