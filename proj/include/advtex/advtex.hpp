#pragma once

#include "advtex/attack.hpp"
#include "advtex/classifier.hpp"
#include "advtex/config.hpp"
#include "advtex/corpus.hpp"
#include "advtex/digest.hpp"
#include "advtex/errors.hpp"
#include "advtex/image.hpp"
#include "advtex/mesh.hpp"
#include "advtex/metrics.hpp"
#include "advtex/parallel.hpp"
#include "advtex/pipeline.hpp"
#include "advtex/primitives.hpp"
#include "advtex/rasterizer.hpp"
#include "advtex/report_io.hpp"
#include "advtex/saliency.hpp"
#include "advtex/scene.hpp"
#include "advtex/surrogate.hpp"
#include "advtex/target.hpp"
#include "advtex/weights_io.hpp"
