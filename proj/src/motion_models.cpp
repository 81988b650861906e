#include "phystrack/motion_models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "phystrack/errors.hpp"

namespace phystrack {
namespace {

constexpr double kMinHeadHeight = 1e-3;

// Phys3D state indices.
constexpr int kX = 0;
constexpr int kY = 1;
constexpr int kH = 2;
constexpr int kZ = 3;
constexpr int kZdot = 4;
constexpr int kZddot = 5;

void symmetrize(Eigen::MatrixXd& p) { p = 0.5 * (p + p.transpose()).eval(); }

void clamp_phys3d(KalmanState& s) {
  s.mean[kZ] = std::max(s.mean[kZ], kMinDepth);
  s.mean[kH] = std::max(s.mean[kH], kMinHeadHeight);
}

}  // namespace

std::string_view to_string(MotionModelKind kind) {
  switch (kind) {
    case MotionModelKind::CV8D: return "cv8d";
    case MotionModelKind::CA12D: return "ca12d";
    case MotionModelKind::Phys3D: return "phys3d";
  }
  return "unknown";
}

MotionModelKind parse_motion_model(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::erase(lower, '-');
  if (lower == "cv8d") return MotionModelKind::CV8D;
  if (lower == "ca12d") return MotionModelKind::CA12D;
  if (lower == "phys3d") return MotionModelKind::Phys3D;
  throw Error(ErrorCode::Config, "unknown motion model '" + std::string(name) + "'");
}

MotionModel::MotionModel(MotionModelKind kind, NoiseParams noise, CameraIntrinsics cam)
    : kind_(kind), noise_(noise), cam_(cam) {
  if (!(noise_.frame_dt > 0.0)) {
    throw Error(ErrorCode::Config, "frame_dt must be positive");
  }
  if (kind_ == MotionModelKind::Phys3D) cam_.validate();
}

int MotionModel::order() const { return kind_ == MotionModelKind::CA12D ? 3 : 2; }

int MotionModel::state_dim() const {
  switch (kind_) {
    case MotionModelKind::CV8D: return 8;
    case MotionModelKind::CA12D: return 12;
    case MotionModelKind::Phys3D: return 6;
  }
  return 0;
}

int MotionModel::measurement_dim() const { return kind_ == MotionModelKind::Phys3D ? 3 : 4; }

KalmanState MotionModel::initiate(const HeadBox& det, std::optional<DepthMotionSeed> seed) const {
  if (!(det.h > 0.0) || !(det.a > 0.0)) {
    throw Error(ErrorCode::Domain, "detection must have positive height and aspect");
  }
  KalmanState s;
  const int n = state_dim();
  s.mean = Eigen::VectorXd::Zero(n);
  s.aspect_ema = det.a;

  if (kind_ == MotionModelKind::Phys3D) {
    const Point3D p = backproject(det, noise_.head_height, cam_);
    const DepthMotionSeed dz = seed.value_or(DepthMotionSeed{noise_.ego_velocity_prior, 0.0});
    s.mean << p.x, p.y, noise_.head_height, p.z, dz.rate, dz.accel;
    Eigen::VectorXd std(6);
    std << 0.5, 0.5, 0.05, 0.2 * p.z, 2.0, 1.0;
    s.covariance = std.array().square().matrix().asDiagonal();
    return s;
  }

  s.mean.head<4>() << det.x, det.y, det.a, det.h;
  const double dt = noise_.frame_dt;
  const double pos = 2.0 * noise_.pos_weight * det.h;
  const double vel = 10.0 * noise_.vel_weight * det.h / dt;
  Eigen::VectorXd std(n);
  std.head<8>() << pos, pos, noise_.aspect_pos_std, pos, vel, vel, noise_.aspect_vel_std / dt, vel;
  if (n == 12) {
    const double acc = 10.0 * noise_.acc_weight * det.h / (dt * dt);
    std.tail<4>() << acc, acc, noise_.aspect_acc_std / (dt * dt), acc;
  }
  s.covariance = std.array().square().matrix().asDiagonal();
  return s;
}

Eigen::MatrixXd MotionModel::transition(double dt) const {
  const int n = state_dim();
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(n, n);
  if (kind_ == MotionModelKind::Phys3D) {
    f(kZ, kZdot) = dt;
    f(kZ, kZddot) = 0.5 * dt * dt;
    f(kZdot, kZddot) = dt;
    return f;
  }
  for (int i = 0; i < 4; ++i) {
    f(i, 4 + i) = dt;
    if (order() == 3) {
      f(i, 8 + i) = 0.5 * dt * dt;
      f(4 + i, 8 + i) = dt;
    }
  }
  return f;
}

Eigen::MatrixXd MotionModel::process_noise(const KalmanState& state, double dt) const {
  const int n = state_dim();
  Eigen::VectorXd var(n);
  if (kind_ == MotionModelKind::Phys3D) {
    var << noise_.sigma_lateral, noise_.sigma_lateral, noise_.sigma_head, noise_.sigma_depth,
        noise_.sigma_depth_rate, noise_.sigma_depth_accel;
    var = var.array().square() * dt;
    return var.asDiagonal();
  }
  const double fdt = noise_.frame_dt;
  const double h = state.mean[3];
  const double pos = noise_.pos_weight * h;
  const double vel = noise_.vel_weight * h / fdt;
  var.head<8>() << pos, pos, noise_.aspect_pos_std, pos, vel, vel, noise_.aspect_vel_std / fdt, vel;
  if (n == 12) {
    const double acc = noise_.acc_weight * h / (fdt * fdt);
    var.tail<4>() << acc, acc, noise_.aspect_acc_std / (fdt * fdt), acc;
  }
  var = var.array().square() * (dt / fdt);
  return var.asDiagonal();
}

Eigen::MatrixXd MotionModel::measurement_noise(double predicted_h) const {
  const double px = std::max(noise_.meas_min_px, noise_.meas_rel * std::abs(predicted_h));
  if (kind_ == MotionModelKind::Phys3D) {
    return Eigen::Vector3d::Constant(px * px).asDiagonal();
  }
  Eigen::Vector4d v(px * px, px * px, noise_.meas_aspect * noise_.meas_aspect, px * px);
  return v.asDiagonal();
}

KalmanState MotionModel::predict(const KalmanState& state, double dt) const {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "prediction interval must be positive");
  }
  const Eigen::MatrixXd f = transition(dt);
  KalmanState out = state;
  out.mean = f * state.mean;
  out.covariance = f * state.covariance * f.transpose() + process_noise(state, dt);
  symmetrize(out.covariance);
  if (kind_ == MotionModelKind::Phys3D) clamp_phys3d(out);
  return out;
}

Eigen::VectorXd MotionModel::measurement_vector(const HeadBox& box) const {
  if (kind_ == MotionModelKind::Phys3D) return Eigen::Vector3d(box.x, box.y, box.h);
  return Eigen::Vector4d(box.x, box.y, box.a, box.h);
}

KalmanState MotionModel::update_depth_rate(const KalmanState& state, double rate, double stddev) const {
  if (kind_ != MotionModelKind::Phys3D) throw Error(ErrorCode::InvalidArgument, "depth rate exists only in Phys3D");
  if (!(stddev > 0.0) || !std::isfinite(rate)) throw Error(ErrorCode::Domain, "depth rate std must be positive");
  constexpr int kRate = 4;
  const double r = stddev * stddev;
  const double s = state.covariance(kRate, kRate) + r;
  if (!(s > 0.0)) throw Error(ErrorCode::Numerical, "depth rate innovation variance is not positive");
  const Eigen::VectorXd gain = state.covariance.col(kRate) / s;
  KalmanState out = state;
  out.mean += gain * (rate - state.mean(kRate));
  Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(6, 6);
  ikh.col(kRate) -= gain;
  out.covariance = ikh * state.covariance * ikh.transpose() + r * gain * gain.transpose();
  symmetrize(out.covariance);
  clamp_phys3d(out);
  return out;
}

Projection MotionModel::project(const KalmanState& state) const {
  Projection p;
  if (kind_ == MotionModelKind::Phys3D) {
    const Phys3DVector s = state.mean;
    const Phys3DJacobian j = measurement_jacobian(s, cam_);
    p.mean = phys3d_measurement(s, cam_);
    p.covariance = j * state.covariance * j.transpose() + measurement_noise(p.mean[2]);
  } else {
    const int m = 4;
    p.mean = state.mean.head(m);
    p.covariance = state.covariance.topLeftCorner(m, m) + measurement_noise(state.mean[3]);
  }
  p.llt.compute(p.covariance);
  p.invertible = p.llt.info() == Eigen::Success && p.covariance.allFinite();
  return p;
}

double MotionModel::gating_distance(const Projection& proj, const HeadBox& meas) const {
  if (!proj.invertible) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd nu = measurement_vector(meas) - proj.mean;
  const Eigen::VectorXd w = proj.llt.matrixL().solve(nu);
  return w.squaredNorm();
}

double MotionModel::gating_distance(const KalmanState& state, const HeadBox& meas) const {
  return gating_distance(project(state), meas);
}

KalmanState MotionModel::update(const KalmanState& state, const HeadBox& meas) const {
  if (!(meas.h > 0.0) || !(meas.a > 0.0)) {
    throw Error(ErrorCode::Domain, "measurement must have positive height and aspect");
  }
  const int n = state_dim();
  const int m = measurement_dim();
  Eigen::MatrixXd hobs = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd predicted(m);
  if (kind_ == MotionModelKind::Phys3D) {
    const Phys3DVector s = state.mean;
    hobs = measurement_jacobian(s, cam_);
    predicted = phys3d_measurement(s, cam_);
  } else {
    hobs.leftCols(m).setIdentity();
    predicted = state.mean.head(m);
  }
  const Eigen::MatrixXd r = measurement_noise(predicted[m - 1]);
  const Eigen::MatrixXd pht = state.covariance * hobs.transpose();
  const Eigen::MatrixXd s = hobs * pht + r;
  const Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success || !s.allFinite()) {
    throw Error(ErrorCode::Numerical, "innovation covariance is not invertible");
  }
  const Eigen::MatrixXd gain = llt.solve(pht.transpose()).transpose();
  const Eigen::VectorXd innovation = measurement_vector(meas) - predicted;

  KalmanState out = state;
  out.mean = state.mean + gain * innovation;
  // Joseph form keeps the posterior PSD under round-off.
  const Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(n, n) - gain * hobs;
  out.covariance = ikh * state.covariance * ikh.transpose() + gain * r * gain.transpose();
  symmetrize(out.covariance);
  if (!out.mean.allFinite() || !out.covariance.allFinite()) {
    throw Error(ErrorCode::Numerical, "non-finite posterior");
  }
  if (kind_ == MotionModelKind::Phys3D) {
    out.aspect_ema = (1.0 - noise_.aspect_beta) * state.aspect_ema + noise_.aspect_beta * meas.a;
    clamp_phys3d(out);
  }
  return out;
}

HeadBox MotionModel::to_box(const KalmanState& state) const {
  if (kind_ == MotionModelKind::Phys3D) {
    const Eigen::Vector3d m = phys3d_measurement(Phys3DVector(state.mean), cam_);
    return HeadBox{m[0], m[1], state.aspect_ema, m[2]};
  }
  return HeadBox{state.mean[0], state.mean[1], state.mean[2], state.mean[3]};
}

}  // namespace phystrack
