#pragma once

#include "hospigrid/catalog.hpp"
#include "hospigrid/common.hpp"
#include "hospigrid/console.hpp"
#include "hospigrid/federation.hpp"
#include "hospigrid/grid.hpp"
#include "hospigrid/gridio.hpp"
#include "hospigrid/jobs.hpp"
#include "hospigrid/model.hpp"
#include "hospigrid/query.hpp"
#include "hospigrid/transport.hpp"
