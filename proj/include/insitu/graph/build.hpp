#pragma once

#include "insitu/graph/graph.hpp"
#include "insitu/seg/fcn.hpp"
#include "insitu/sr/vitsr.hpp"

namespace insitu::graph {

/// Eval-mode ViTSR for a fixed LR size. Input [2N+1, h, w], output
/// [1, r*h, r*w].
InferenceGraph build_graph(const sr::ViTSR& model, std::size_t h, std::size_t w);

/// Eval-mode FCN logits for a fixed size (multiples of 8). Input [1, h, w],
/// output [3, h, w].
InferenceGraph build_graph(const seg::FCN& model, std::size_t h, std::size_t w);

} // namespace insitu::graph
