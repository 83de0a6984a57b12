#pragma once

#include <Eigen/Dense>

namespace parabolica {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Mat3X = Eigen::Matrix3Xd;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace parabolica
