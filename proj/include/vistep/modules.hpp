#pragma once

#include "vistep/image_ops.hpp"
#include "vistep/neural.hpp"
#include "vistep/registry.hpp"

namespace vistep {

struct ModuleConfig {
  neural::ListConfig list;
  const ops::EmojiTable* emoji = nullptr;  // null: the shipped table
};

/// The full module roster: LOC, FACEDET, SEG, VQA, SELECT, CLASSIFY, LIST,
/// COUNT, CROP, CROP_{LEFTOF,RIGHTOF,ABOVE,BELOW,FRONTOF,BEHIND}, EVAL, RESULT,
/// TAG, COLORPOP, BGBLUR, EMOJI, REPLACE.
Registry standard_registry(const ModuleConfig& config = {});

void add_symbolic_modules(Registry& registry, const ModuleConfig& config = {});
void add_neural_modules(Registry& registry, const ModuleConfig& config = {});

}  // namespace vistep
