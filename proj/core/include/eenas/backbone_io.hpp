#pragma once

#include <iosfwd>
#include <string>

#include "eenas/arch.hpp"

namespace eenas {

// Plain-text backbone table. Global settings are `key value...` lines
// (name, input H W C, kernel, padding, expansion, classes); every other
// non-comment line is a row:
//
//   <operator> <repetition> <exit labels|-> <channels> <stride>
//
// where exit labels are comma-separated, one per repetition.
BackboneSpec parse_backbone(std::istream& in, const std::string& source = "<stream>");
BackboneSpec load_backbone(const std::string& path);
void write_backbone(std::ostream& out, const BackboneSpec& spec);

/// The MobileNetV2 table used for the CIFAR-10 experiments (mounts A..K).
BackboneSpec mobilenetv2_cifar10();

/// Dense toy backbone: `widths.size()` linear blocks, each followed by one
/// mount label (A, B, ...).
BackboneSpec toy_dense_backbone(int input_features, const std::vector<int>& widths,
                                int num_classes);

}  // namespace eenas
