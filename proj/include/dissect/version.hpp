#pragma once

namespace dissect {

inline constexpr const char* kArtifactVersion = "dissect-lab 0.1.0";

}  // namespace dissect
