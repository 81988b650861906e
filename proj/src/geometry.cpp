#include "phystrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "phystrack/errors.hpp"

namespace phystrack {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::Domain, "focal lengths must be positive");
  }
  if (!(image_width > 0.0) || !(image_height > 0.0)) {
    throw Error(ErrorCode::Domain, "image dimensions must be positive");
  }
  if (cx < 0.0 || cx > image_width || cy < 0.0 || cy > image_height) {
    throw Error(ErrorCode::Domain, "principal point outside the image");
  }
}

HeadBox HeadBox::from_tlwh(double left, double top, double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw Error(ErrorCode::Domain, "non-positive box dimension");
  }
  return HeadBox{left + 0.5 * width, top + 0.5 * height, width / height, height};
}

PixelPoint project(const Point3D& p, const CameraIntrinsics& cam) {
  if (!(p.z > 0.0)) {
    throw Error(ErrorCode::Domain, "behind camera");
  }
  return {cam.cx + cam.fx * p.x / p.z, cam.cy + cam.fy * p.y / p.z};
}

double depth_from_height(double h, double head_height, const CameraIntrinsics& cam) {
  if (!(h > 0.0)) {
    throw Error(ErrorCode::Domain, "box height must be positive");
  }
  if (!(head_height > 0.0)) {
    throw Error(ErrorCode::Domain, "head height must be positive");
  }
  return std::max(cam.fy * head_height / h, kMinDepth);
}

Point3D backproject(const HeadBox& box, double head_height, const CameraIntrinsics& cam) {
  const double z = depth_from_height(box.h, head_height, cam);
  return {(box.x - cam.cx) * z / cam.fx, (box.y - cam.cy) * z / cam.fy, z};
}

Eigen::Vector3d phys3d_measurement(const Phys3DVector& s, const CameraIntrinsics& cam) {
  const double z = s[3];
  if (!(z > 0.0)) {
    throw Error(ErrorCode::Domain, "behind camera");
  }
  return {cam.cx + cam.fx * s[0] / z, cam.cy + cam.fy * s[1] / z, cam.fy * s[2] / z};
}

Phys3DJacobian measurement_jacobian(const Phys3DVector& s, const CameraIntrinsics& cam) {
  const double z = s[3];
  if (!(z > 0.0)) {
    throw Error(ErrorCode::Domain, "behind camera");
  }
  const double z2 = z * z;
  Phys3DJacobian j = Phys3DJacobian::Zero();
  j(0, 0) = cam.fx / z;
  j(0, 3) = -cam.fx * s[0] / z2;
  j(1, 1) = cam.fy / z;
  j(1, 3) = -cam.fy * s[1] / z2;
  j(2, 2) = cam.fy / z;
  j(2, 3) = -cam.fy * s[2] / z2;
  return j;
}

double iou(const HeadBox& a, const HeadBox& b) {
  // Areas from the same edge arithmetic as the overlap, so identical boxes give exactly 1.
  const double al = a.left(), ar = al + a.width(), at = a.top(), ab = at + a.h;
  const double bl = b.left(), br = bl + b.width(), bt = b.top(), bb = bt + b.h;
  const double ix = std::min(ar, br) - std::max(al, bl);
  const double iy = std::min(ab, bb) - std::max(at, bt);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = (ar - al) * (ab - at) + (br - bl) * (bb - bt) - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

}  // namespace phystrack
