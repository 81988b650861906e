#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "phystrack/geometry.hpp"
#include "phystrack/motion_models.hpp"

namespace phystrack {

/// L2-normalized appearance vector. An empty embedding means "no appearance".
class Embedding {
 public:
  static constexpr std::size_t kDefaultDim = 128;
  static constexpr double kNormTolerance = 1e-6;

  Embedding() = default;
  /// Requires |norm - 1| < kNormTolerance; throws Error(Domain) otherwise.
  explicit Embedding(std::vector<double> values);
  /// Scales to unit norm; throws Error(Domain) on a zero vector.
  static Embedding normalized(std::vector<double> values);

  bool empty() const { return values_.empty(); }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double dot(const Embedding& other) const;

 private:
  std::vector<double> values_;
};

struct Detection {
  HeadBox box;
  double confidence = 1.0;
  Embedding embedding;
};

enum class TrackStatus { Tentative, Confirmed, Deleted };

struct Track {
  int id = 0;
  KalmanState state;
  TrackStatus status = TrackStatus::Tentative;
  int hits = 1;
  int age = 1;
  int time_since_update = 0;
  int created_frame = 0;
  int last_update_frame = 0;
  HeadBox last_measurement;
  std::vector<Embedding> gallery;  // oldest first

  bool is_confirmed() const { return status == TrackStatus::Confirmed; }
  bool is_tentative() const { return status == TrackStatus::Tentative; }
};

}  // namespace phystrack
