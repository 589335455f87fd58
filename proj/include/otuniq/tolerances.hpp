#pragma once

namespace otuniq {

/// Numerical thresholds. Tightness and face thresholds scale with the largest
/// cost magnitude so that geometry scale and mass scale stay decoupled.
struct Tolerances {
  double mass = 1e-9;        // relative, on marginal sums
  double tight_rel = 1e-7;   // times (1 + max|c|)
  double gap = 1e-7;         // relative duality gap
  double face_rel = 1e-6;    // times (1 + max|c|)
  double geom = 1e-12;       // per-coordinate point distinctness

  double tight(double max_cost) const { return tight_rel * (1.0 + max_cost); }
  double face(double max_cost) const { return face_rel * (1.0 + max_cost); }
  double gap_bound(double primal) const {
    return gap * (1.0 + (primal < 0 ? -primal : primal));
  }
};

}  // namespace otuniq
