#pragma once

// Umbrella header: the full streaming hidden-graph recognition toolkit.

#include "dgm/box.hpp"
#include "dgm/checkpoint.hpp"
#include "dgm/dataset.hpp"
#include "dgm/engine.hpp"
#include "dgm/error.hpp"
#include "dgm/graph_core.hpp"
#include "dgm/io.hpp"
#include "dgm/location_graph.hpp"
#include "dgm/lstm.hpp"
#include "dgm/model.hpp"
#include "dgm/params.hpp"
#include "dgm/proposal.hpp"
#include "dgm/readout.hpp"
#include "dgm/rng.hpp"
#include "dgm/synthetic.hpp"
#include "dgm/tape.hpp"
#include "dgm/tensor.hpp"
#include "dgm/text.hpp"
#include "dgm/train.hpp"
#include "dgm/visual_graph.hpp"
