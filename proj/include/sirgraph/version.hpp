#pragma once

#include <Eigen/Core>

#define SIRGRAPH_STR_(x) #x
#define SIRGRAPH_STR(x) SIRGRAPH_STR_(x)

namespace sirgraph {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kEigenVersion = SIRGRAPH_STR(EIGEN_WORLD_VERSION) "." SIRGRAPH_STR(
    EIGEN_MAJOR_VERSION) "." SIRGRAPH_STR(EIGEN_MINOR_VERSION);

}  // namespace sirgraph
