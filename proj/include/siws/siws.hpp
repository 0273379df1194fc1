#pragma once

#include "siws/error.hpp"
#include "siws/scalegrid.hpp"
#include "siws/model.hpp"
#include "siws/parallel.hpp"
#include "siws/synth.hpp"
#include "siws/tfr.hpp"
#include "siws/kernel.hpp"
#include "siws/bench.hpp"
#include "siws/io.hpp"
