#pragma once

// Umbrella header: vote-history ingestion, the three case transformations,
// tree-forest and latent-class learners, next-vote prediction, and evaluation.

#include "nextvote/catalog.hpp"
#include "nextvote/cases.hpp"
#include "nextvote/cluster.hpp"
#include "nextvote/errors.hpp"
#include "nextvote/evaluate.hpp"
#include "nextvote/forest.hpp"
#include "nextvote/model.hpp"
#include "nextvote/recommend.hpp"
#include "nextvote/transforms.hpp"
#include "nextvote/tree.hpp"

namespace nextvote {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nextvote
