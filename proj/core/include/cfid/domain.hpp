#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cfid {

// One sample of a follower-leader pair at fixed rate. h is the longitudinal
// distance to the leader, hdot the leader's speed relative to the ego
// (positive = gap opening).
struct Frame {
  double v = 0.0;     // ego longitudinal speed [m/s]
  double a = 0.0;     // ego longitudinal acceleration [m/s^2]
  double h = 0.0;     // gap to leader [m], > 0
  double hdot = 0.0;  // leader speed minus ego speed [m/s]
};

struct CarFollowingSequence {
  std::vector<Frame> frames;
  double dt = 0.1;         // sampling period [s]
  std::string driver_id;   // empty for unlabeled data
  std::string source_id;   // provenance tag (file stem, generator id, ...)

  double duration() const { return static_cast<double>(frames.size()) * dt; }
};

// Fixed-length windowing with overlap ratio r: consecutive windows start
// T*(1-r) apart and overlap by T*r.
struct ResampleConfig {
  double window_T = 15.0;
  double overlap_ratio = 0.0;  // r in [0, 1)

  double stride() const { return window_T * (1.0 - overlap_ratio); }
  void validate() const;  // throws ValidationError
};

struct Dataset {
  std::vector<CarFollowingSequence> sequences;
  std::string split;  // "train", "test" or empty

  // Sorted unique driver ids; the sort order defines driver indices
  // everywhere downstream.
  std::vector<std::string> driver_ids() const;
  std::map<std::string, std::vector<const CarFollowingSequence*>> by_driver() const;
  // Throws ValidationError if any sequence lacks a driver_id.
  void require_labeled() const;
};

struct ValidationResult {
  bool ok = false;
  std::string reason;  // first violated criterion on rejection
};

// Car-following acceptance criteria: long enough, gap bounded at every
// frame, frames physically well formed. A single source_id is assumed to
// encode an unchanged leader.
ValidationResult validate_car_following(const CarFollowingSequence& seq,
                                        double max_gap = 40.0,
                                        double min_duration = 25.0);

// Cuts windows of duration T starting at n*T' for n = 0,1,...; the tail
// remainder is dropped. A sequence shorter than T yields an empty list.
// Window frames are copies; driver and source labels are inherited.
std::vector<CarFollowingSequence> resample(const CarFollowingSequence& seq,
                                           const ResampleConfig& cfg);
Dataset resample(const Dataset& ds, const ResampleConfig& cfg);

}  // namespace cfid
