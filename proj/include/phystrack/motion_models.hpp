#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "phystrack/geometry.hpp"

namespace phystrack {

enum class MotionModelKind { CV8D, CA12D, Phys3D };

std::string_view to_string(MotionModelKind kind);
/// Accepts "cv8d", "ca12d", "phys3d" (case-insensitive); throws Error(Config) otherwise.
MotionModelKind parse_motion_model(std::string_view name);

/// Process and measurement noise scales. Image-space stds are "per frame" at
/// frame_dt and their variances scale linearly with the prediction interval.
struct NoiseParams {
  double frame_dt = 1.0 / 25.0;

  double pos_weight = 1.0 / 20.0;
  double vel_weight = 1.0 / 160.0;
  double acc_weight = 1.0 / 320.0;
  double aspect_pos_std = 1e-2;
  double aspect_vel_std = 1e-5;
  double aspect_acc_std = 1e-6;

  // Phys3D process noise, per sqrt(second).
  double sigma_lateral = 0.05;
  double sigma_head = 0.01;
  double sigma_depth = 0.1;
  double sigma_depth_rate = 0.5;
  double sigma_depth_accel = 0.5;

  double meas_rel = 0.05;
  double meas_min_px = 1.0;
  double meas_aspect = 0.1;

  double aspect_beta = 0.3;
  double head_height = kDefaultHeadHeight;
  /// Initial Zdot (m/s) for new Phys3D tracks; negative means approaching.
  double ego_velocity_prior = 0.0;
};

/// Filter state. mean has 8 (CV8D), 12 (CA12D) or 6 (Phys3D) entries.
struct KalmanState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double aspect_ema = 1.0;  // Phys3D only
};

/// Predicted measurement and innovation covariance, factored once per state.
struct Projection {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool invertible = false;
};

/// Optional seed for the depth dynamics of a new Phys3D track.
struct DepthMotionSeed {
  double rate = 0.0;
  double accel = 0.0;
};

class MotionModel {
 public:
  MotionModel(MotionModelKind kind, NoiseParams noise, CameraIntrinsics cam);

  MotionModelKind kind() const { return kind_; }
  const NoiseParams& noise() const { return noise_; }
  const CameraIntrinsics& camera() const { return cam_; }
  int state_dim() const;
  int measurement_dim() const;

  KalmanState initiate(const HeadBox& det, std::optional<DepthMotionSeed> seed = std::nullopt) const;
  KalmanState predict(const KalmanState& state, double dt) const;
  /// Throws Error(Numerical) if the innovation covariance is not positive definite.
  KalmanState update(const KalmanState& state, const HeadBox& meas) const;
  /// Phys3D only: scalar update of the depth rate Z-dot with an external
  /// estimate (value, std). Used to share the camera's ego-motion across tracks.
  KalmanState update_depth_rate(const KalmanState& state, double rate, double stddev) const;

  Projection project(const KalmanState& state) const;
  Eigen::VectorXd measurement_vector(const HeadBox& box) const;
  /// Squared Mahalanobis distance; +inf when S is singular.
  double gating_distance(const KalmanState& state, const HeadBox& meas) const;
  double gating_distance(const Projection& proj, const HeadBox& meas) const;

  HeadBox to_box(const KalmanState& state) const;

  Eigen::MatrixXd transition(double dt) const;
  Eigen::MatrixXd process_noise(const KalmanState& state, double dt) const;
  Eigen::MatrixXd measurement_noise(double predicted_h) const;

 private:
  int order() const;  // 2 for CV, 3 for CA

  MotionModelKind kind_;
  NoiseParams noise_;
  CameraIntrinsics cam_;
};

}  // namespace phystrack
