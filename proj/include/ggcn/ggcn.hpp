#pragma once

// Umbrella header for the whole library.

#include "ggcn/adam.hpp"
#include "ggcn/bilstm.hpp"
#include "ggcn/checkpoint.hpp"
#include "ggcn/cli.hpp"
#include "ggcn/config.hpp"
#include "ggcn/consistency.hpp"
#include "ggcn/corpus.hpp"
#include "ggcn/embeddings.hpp"
#include "ggcn/gcn.hpp"
#include "ggcn/gradcheck.hpp"
#include "ggcn/metrics.hpp"
#include "ggcn/model.hpp"
#include "ggcn/rng.hpp"
#include "ggcn/tensor.hpp"
#include "ggcn/train_config.hpp"
#include "ggcn/trainer.hpp"
