#pragma once

#include <Eigen/Dense>

namespace dqrise {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Hand = Eigen::Matrix<double, 6, 1>;   // joint positions, each in [0,1]
using Obs = Eigen::Matrix<double, 13, 1>;   // arm(4) + hand(6) + object(3)

struct ArmState {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;
  double yaw = 0.0;

  Eigen::Vector4d vec() const { return {x, y, z, yaw}; }
  static ArmState from(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

}  // namespace dqrise
