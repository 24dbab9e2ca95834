#pragma once

namespace dhanshr {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr unsigned kCheckpointFormatVersion = 1;

}  // namespace dhanshr
