#pragma once

#include "loha/config.hpp"
#include "loha/core.hpp"
#include "loha/dense_eig.hpp"
#include "loha/graph.hpp"
#include "loha/io.hpp"
#include "loha/model.hpp"
#include "loha/signals.hpp"
#include "loha/spectral.hpp"
#include "loha/tape.hpp"
#include "loha/trainer.hpp"
