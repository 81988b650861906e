#pragma once

#include <Eigen/Core>

namespace phystrack {

/// Minimum depth (m) applied to every geometric inversion.
inline constexpr double kMinDepth = 0.5;
/// Prior 3D head height (m).
inline constexpr double kDefaultHeadHeight = 0.3;

struct CameraIntrinsics {
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 960.0;
  double cy = 540.0;
  double image_width = 1920.0;
  double image_height = 1080.0;

  /// Throws Error(Domain) on non-positive focal lengths or an out-of-image principal point.
  void validate() const;
};

/// Camera-frame point in meters; z is depth along the optical axis.
struct Point3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Center-based head box: (x, y) center in pixels, a = w/h, h in pixels.
struct HeadBox {
  double x = 0.0;
  double y = 0.0;
  double a = 1.0;
  double h = 1.0;

  double width() const { return a * h; }
  double left() const { return x - 0.5 * width(); }
  double top() const { return y - 0.5 * h; }

  static HeadBox from_tlwh(double left, double top, double width, double height);
};

PixelPoint project(const Point3D& p, const CameraIntrinsics& cam);

/// Z = fy * H / h, clamped to kMinDepth.
double depth_from_height(double h, double head_height, const CameraIntrinsics& cam);

Point3D backproject(const HeadBox& box, double head_height, const CameraIntrinsics& cam);

/// State layout [X, Y, H, Z, Zdot, Zddot]; measurement layout [x, y, h].
using Phys3DVector = Eigen::Matrix<double, 6, 1>;
using Phys3DJacobian = Eigen::Matrix<double, 3, 6>;

/// Nonlinear measurement m(state) = [cx + fx X/Z, cy + fy Y/Z, fy H/Z].
Eigen::Vector3d phys3d_measurement(const Phys3DVector& state, const CameraIntrinsics& cam);
Phys3DJacobian measurement_jacobian(const Phys3DVector& state, const CameraIntrinsics& cam);

double iou(const HeadBox& a, const HeadBox& b);

}  // namespace phystrack
