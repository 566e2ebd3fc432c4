#pragma once

namespace kelly {

// Kernels that can fan out over OpenMP threads take this switch. Results
// are bitwise identical under both policies; Serial exists for reference
// testing and benchmarking.
enum class Execution { Serial, Parallel };

}  // namespace kelly
