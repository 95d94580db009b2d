#pragma once

// Umbrella header: multi-fold filter-convolution face descriptors.

#include "mffc/config.hpp"
#include "mffc/conv.hpp"
#include "mffc/descriptor.hpp"
#include "mffc/diversify.hpp"
#include "mffc/errors.hpp"
#include "mffc/eval.hpp"
#include "mffc/filter_learning.hpp"
#include "mffc/gabor.hpp"
#include "mffc/image.hpp"
#include "mffc/io.hpp"
#include "mffc/patches.hpp"
#include "mffc/pipeline.hpp"
#include "mffc/pooling.hpp"
#include "mffc/synth.hpp"
#include "mffc/types.hpp"
#include "mffc/wpca.hpp"
