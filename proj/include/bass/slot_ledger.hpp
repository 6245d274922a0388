#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bass/error.hpp"
#include "bass/topology.hpp"

namespace bass {

inline constexpr double kTimeTol = 1e-9;

/// Data movement time in seconds for a split of `size_mb` megabytes over an
/// effective bandwidth of `rate_mbps * fraction`. A zero-size split moves in
/// zero time; a co-located source (empty path) never reaches this call.
inline double movement_time(double size_mb, double rate_mbps, double fraction) {
  if (size_mb == 0.0) return 0.0;
  if (fraction <= 0.0) fail(Errc::zero_bandwidth, "transfer planned over zero residual bandwidth");
  if (rate_mbps <= 0.0) fail(Errc::zero_bandwidth, "transfer planned over zero link rate");
  return size_mb * 8.0 / (rate_mbps * fraction);
}

/// A granted bandwidth reservation: one fraction held on every link of the
/// path over the inclusive 1-based slot range [first_slot, last_slot].
struct Reservation {
  std::int64_t id = 0;
  TaskId task = 0;
  Path path;
  int first_slot = 1;
  int last_slot = 0;  // < first_slot means an empty reservation
  double fraction = 0.0;
  double start = 0.0;  // seconds, transfer interval actually used
  double end = 0.0;
  double size_mb = 0.0;

  bool empty() const { return last_slot < first_slot; }
};

/// Transfer window produced by the slot scan, ready to be granted.
struct TransferPlan {
  double start = 0.0;
  double end = 0.0;
  double fraction = 1.0;
  int first_slot = 1;
  int last_slot = 0;
};

/// Per-link, per-time-slot residual bandwidth fractions with reservations.
/// Slot TS_k (1-based) covers the half-open interval ((k-1)*dur, k*dur]. The
/// horizon grows on demand; an untouched slot has residual 1. Residuals are
/// recomputed from the set of active holds, so releasing a reservation
/// restores the previous state exactly.
class SlotLedger {
 public:
  explicit SlotLedger(double slot_duration = 1.0) : slot_duration_(slot_duration) {
    if (slot_duration <= 0.0) fail(Errc::validation_error, "slot duration must be positive");
  }

  double slot_duration() const { return slot_duration_; }

  /// First slot whose interval intersects [start, ...).
  int slot_of_start(double start) const { return static_cast<int>(std::floor(start / slot_duration_ + kTimeTol)) + 1; }
  /// Last slot whose interval intersects (..., end).
  int slot_of_end(double end) const { return static_cast<int>(std::ceil(end / slot_duration_ - kTimeTol)); }

  double residual(LinkId link, int slot) const {
    auto li = holds_.find(link);
    if (li == holds_.end()) return 1.0;
    auto si = li->second.find(slot);
    if (si == li->second.end()) return 1.0;
    double taken = 0.0;
    for (const Hold& h : si->second) taken += h.fraction;
    return 1.0 - taken;
  }

  /// Minimum residual fraction over every link of the path and every slot in
  /// the inclusive range; 1.0 for an empty path or empty range.
  double path_residual(const Path& path, int first_slot, int last_slot) const {
    double res = 1.0;
    for (LinkId link : path)
      for (int s = first_slot; s <= last_slot; ++s) res = std::min(res, residual(link, s));
    return res;
  }

  /// Grants `fraction` on every (link, slot) covered by [start, start+duration).
  /// Coverage rounds outward to whole slots. A zero-length transfer yields an
  /// empty reservation and leaves the ledger untouched.
  Reservation reserve(TaskId task, const Path& path, double start, double duration, double fraction,
                      double size_mb = 0.0) {
    if (duration <= 0.0 || path.empty()) {
      Reservation r;
      r.id = next_id_++;
      r.task = task;
      r.start = start;
      r.end = start;
      return r;
    }
    return reserve_slots(task, path, slot_of_start(start), slot_of_end(start + duration), fraction, start,
                         start + duration, size_mb);
  }

  /// Grants an exact slot range; used by reserve(), replay and re-reservation.
  Reservation reserve_slots(TaskId task, const Path& path, int first_slot, int last_slot, double fraction,
                            double start, double end, double size_mb = 0.0) {
    if (fraction <= 0.0) fail(Errc::zero_bandwidth, "reservation with non-positive fraction");
    for (LinkId link : path) {
      for (int s = first_slot; s <= last_slot; ++s) {
        if (residual(link, s) + kTimeTol < fraction) {
          std::ostringstream msg;
          msg << "insufficient residual on link " << link << " slot " << s << ": need " << fraction
              << ", have " << residual(link, s);
          fail(Errc::insufficient_residual, msg.str());
        }
      }
    }
    Reservation r;
    r.id = next_id_++;
    r.task = task;
    r.path = path;
    r.first_slot = first_slot;
    r.last_slot = last_slot;
    r.fraction = fraction;
    r.start = start;
    r.end = end;
    r.size_mb = size_mb;
    for (LinkId link : path)
      for (int s = first_slot; s <= last_slot; ++s) holds_[link][s].push_back({r.id, fraction});
    active_.emplace(r.id, r);
    return r;
  }

  /// Restores the residuals the reservation held. Rejects unknown or already
  /// released reservations.
  void release(const Reservation& r) {
    auto it = active_.find(r.id);
    if (it == active_.end())
      fail(Errc::unknown_reservation, "reservation " + std::to_string(r.id) + " is not active");
    const Reservation& rec = it->second;
    for (LinkId link : rec.path) {
      auto& slots = holds_[link];
      for (int s = rec.first_slot; s <= rec.last_slot; ++s) {
        auto& held = slots[s];
        std::erase_if(held, [&](const Hold& h) { return h.reservation == rec.id; });
        if (held.empty()) slots.erase(s);
      }
      if (slots.empty()) holds_.erase(link);
    }
    active_.erase(it);
  }

  /// Earliest window with start >= not_before in which the transfer finishes
  /// at the residual fraction available over its own covered slots, with
  /// end <= deadline. Scan granularity is one slot. `fixed_duration`
  /// short-circuits the Eq-style arithmetic with a constant transfer time.
  std::optional<TransferPlan> earliest_feasible_window(const Path& path, double size_mb, double rate_mbps,
                                                       double not_before, double deadline,
                                                       std::optional<double> fixed_duration = std::nullopt) const {
    if (path.empty() || size_mb == 0.0) {
      TransferPlan p;
      p.start = not_before;
      p.end = not_before;
      if (p.end > deadline + kTimeTol) return std::nullopt;
      return p;
    }
    double t = not_before;
    // Beyond the horizon every slot is free, so the scan is bounded.
    int last_candidate = std::max(horizon_slot() + 1, slot_of_start(not_before));
    while (t <= deadline + kTimeTol) {
      if (auto plan = window_at(path, size_mb, rate_mbps, t, fixed_duration))
        if (plan->end <= deadline + kTimeTol) return plan;
      int next = slot_of_start(t);
      if (next > last_candidate) return std::nullopt;
      t = next * slot_duration_;  // next slot boundary
    }
    return std::nullopt;
  }

  /// Largest slot index with any hold, 0 for a fresh ledger.
  int horizon_slot() const {
    int h = 0;
    for (const auto& [link, slots] : holds_)
      if (!slots.empty()) h = std::max(h, slots.rbegin()->first);
    return h;
  }

  std::size_t active_reservations() const { return active_.size(); }

  /// Verifies residual + sum of held fractions == 1 on every touched (link, slot).
  bool conserved(double tol = kTimeTol) const {
    for (const auto& [link, slots] : holds_) {
      for (const auto& [slot, held] : slots) {
        double taken = 0.0;
        for (const Hold& h : held) taken += h.fraction;
        double res = residual(link, slot);
        if (std::abs(1.0 - (res + taken)) > tol || res < -tol || res > 1.0 + tol) return false;
      }
    }
    return true;
  }

  /// Occupancy table "link_id,slot_index,residual\n" for every link up to the
  /// current horizon.
  std::string occupancy_csv(const std::vector<LinkId>& links) const {
    std::ostringstream out;
    out << "link_id,slot_index,residual\n";
    int horizon = horizon_slot();
    for (LinkId link : links)
      for (int s = 1; s <= horizon; ++s) out << link << "," << s << "," << format_fraction(residual(link, s)) << "\n";
    return out.str();
  }

  /// Residual vector per link over the horizon, for snapshots and state equality.
  std::map<LinkId, std::vector<double>> snapshot(const std::vector<LinkId>& links) const {
    std::map<LinkId, std::vector<double>> snap;
    int horizon = horizon_slot();
    for (LinkId link : links) {
      auto& v = snap[link];
      v.reserve(static_cast<std::size_t>(horizon));
      for (int s = 1; s <= horizon; ++s) v.push_back(residual(link, s));
    }
    return snap;
  }

 private:
  struct Hold {
    std::int64_t reservation;
    double fraction;
  };

  std::optional<TransferPlan> window_at(const Path& path, double size_mb, double rate_mbps, double start,
                                        std::optional<double> fixed_duration) const {
    int first = slot_of_start(start);
    double fraction = path_residual(path, first, first);
    if (fraction <= kTimeTol) return std::nullopt;
    // Fixpoint: the fraction is the minimum residual over the covered slots,
    // and (without a fixed duration) the covered slots depend on the fraction.
    // The fraction only ever decreases, over a finite set of hold sums.
    for (;;) {
      double duration = fixed_duration ? *fixed_duration : movement_time(size_mb, rate_mbps, fraction);
      int last = std::max(slot_of_end(start + duration), first);
      double f = path_residual(path, first, last);
      if (f <= kTimeTol) return std::nullopt;
      if (f == fraction) {
        TransferPlan p;
        p.start = start;
        p.end = start + duration;
        p.fraction = fraction;
        p.first_slot = first;
        p.last_slot = last;
        return p;
      }
      fraction = f;
    }
  }

  static std::string format_fraction(double f) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", f);
    return buf;
  }

  double slot_duration_;
  std::map<LinkId, std::map<int, std::vector<Hold>>> holds_;
  std::map<std::int64_t, Reservation> active_;
  std::int64_t next_id_ = 1;
};

}  // namespace bass
