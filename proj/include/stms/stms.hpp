#pragma once

// Umbrella header for the STMS-GCN motion-prediction library.

#include "stms/ablation.hpp"
#include "stms/autodiff.hpp"
#include "stms/checkpoint.hpp"
#include "stms/dct.hpp"
#include "stms/errors.hpp"
#include "stms/flat_config.hpp"
#include "stms/gradcheck.hpp"
#include "stms/graph_layers.hpp"
#include "stms/losses.hpp"
#include "stms/matrix.hpp"
#include "stms/metrics.hpp"
#include "stms/model.hpp"
#include "stms/motion.hpp"
#include "stms/motion_io.hpp"
#include "stms/random.hpp"
#include "stms/synthetic.hpp"
#include "stms/train.hpp"
#include "stms/train_config.hpp"
