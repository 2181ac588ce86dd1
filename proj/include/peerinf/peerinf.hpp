#pragma once

#include "peerinf/behavior.hpp"
#include "peerinf/bias_bound.hpp"
#include "peerinf/communities.hpp"
#include "peerinf/config.hpp"
#include "peerinf/embedding.hpp"
#include "peerinf/errors.hpp"
#include "peerinf/experiment.hpp"
#include "peerinf/graph.hpp"
#include "peerinf/inference.hpp"
#include "peerinf/io.hpp"
#include "peerinf/netgen.hpp"
#include "peerinf/report.hpp"
#include "peerinf/rng.hpp"
#include "peerinf/spectral.hpp"
