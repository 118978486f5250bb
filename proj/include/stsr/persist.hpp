#pragma once

#include <string>

#include "stsr/features.hpp"
#include "stsr/head.hpp"

namespace stsr {

// Trained nets and heads persist as tensor files with a JSON sidecar. The
// normalization stats ship with the head; they are part of the deployed
// artifact.

void save_perception(const PerceptionNet& net, const std::string& dir);
PerceptionNet load_perception(const std::string& dir);

void save_head(const MlpHead& head, const NormStats& stats, const std::string& dir);
void load_head(const std::string& dir, MlpHead& head, NormStats& stats);

}  // namespace stsr
