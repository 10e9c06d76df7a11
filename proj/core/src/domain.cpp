#include "cfid/domain.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cfid/errors.hpp"

namespace cfid {

void ResampleConfig::validate() const {
  if (!(window_T > 0.0)) throw ValidationError("resample: window_T must be > 0");
  if (!(overlap_ratio >= 0.0 && overlap_ratio < 1.0))
    throw ValidationError("resample: overlap_ratio must lie in [0, 1)");
  if (!(stride() > 0.0)) throw ValidationError("resample: stride must be > 0");
}

std::vector<std::string> Dataset::driver_ids() const {
  std::set<std::string> ids;
  for (const auto& s : sequences)
    if (!s.driver_id.empty()) ids.insert(s.driver_id);
  return {ids.begin(), ids.end()};
}

std::map<std::string, std::vector<const CarFollowingSequence*>> Dataset::by_driver() const {
  std::map<std::string, std::vector<const CarFollowingSequence*>> groups;
  for (const auto& s : sequences) groups[s.driver_id].push_back(&s);
  return groups;
}

void Dataset::require_labeled() const {
  for (const auto& s : sequences)
    if (s.driver_id.empty())
      throw ValidationError("dataset: unlabeled sequence " + s.source_id);
}

ValidationResult validate_car_following(const CarFollowingSequence& seq,
                                        double max_gap, double min_duration) {
  if (seq.frames.empty()) return {false, "empty sequence"};
  if (!(seq.dt > 0.0)) return {false, "non-positive dt"};
  if (seq.duration() < min_duration)
    return {false, "duration " + std::to_string(seq.duration()) + " s below minimum " +
                       std::to_string(min_duration) + " s"};
  for (std::size_t j = 0; j < seq.frames.size(); ++j) {
    const Frame& f = seq.frames[j];
    if (!(std::isfinite(f.v) && std::isfinite(f.a) && std::isfinite(f.h) &&
          std::isfinite(f.hdot)))
      return {false, "non-finite frame at index " + std::to_string(j)};
    if (!(f.h > 0.0)) return {false, "non-positive gap at index " + std::to_string(j)};
    if (f.h > max_gap)
      return {false, "gap " + std::to_string(f.h) + " m exceeds " +
                         std::to_string(max_gap) + " m at index " + std::to_string(j)};
  }
  return {true, ""};
}

std::vector<CarFollowingSequence> resample(const CarFollowingSequence& seq,
                                           const ResampleConfig& cfg) {
  cfg.validate();
  if (!(seq.dt > 0.0)) throw ValidationError("resample: sequence dt must be > 0");

  const auto total = static_cast<long>(seq.frames.size());
  const auto window_frames = std::lround(cfg.window_T / seq.dt);
  if (window_frames < 1) throw ValidationError("resample: window shorter than one frame");

  std::vector<CarFollowingSequence> windows;
  const double stride = cfg.stride();
  // admit window n iff its continuous start n*T' lies within duration - T,
  // so the count obeys floor((L-T)/T') + 1 exactly
  const double limit = seq.duration() - cfg.window_T;
  const double tol = 1e-9 * std::max(1.0, std::abs(limit));
  for (long n = 0;; ++n) {
    const double t_start = static_cast<double>(n) * stride;
    if (t_start > limit + tol) break;
    const long start = std::lround(t_start / seq.dt);
    if (start + window_frames > total) break;
    CarFollowingSequence w;
    w.dt = seq.dt;
    w.driver_id = seq.driver_id;
    w.source_id = seq.source_id + "#w" + std::to_string(n);
    w.frames.assign(seq.frames.begin() + start, seq.frames.begin() + start + window_frames);
    windows.push_back(std::move(w));
  }
  return windows;
}

Dataset resample(const Dataset& ds, const ResampleConfig& cfg) {
  Dataset out;
  out.split = ds.split;
  for (const auto& seq : ds.sequences) {
    auto windows = resample(seq, cfg);
    out.sequences.insert(out.sequences.end(),
                         std::make_move_iterator(windows.begin()),
                         std::make_move_iterator(windows.end()));
  }
  return out;
}

}  // namespace cfid
