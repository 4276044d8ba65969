#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "loopshift/transfer_function.hpp"

namespace loopshift {

// Frequencies are in cycles per iteration (unit sample time, Nyquist 0.5).

struct FrequencyRow {
  double f = 0.0;
  double magnitude_db = 0.0;
  double phase_deg = 0.0;            // principal value in (-180, 180]
  double phase_unwrapped_deg = 0.0;  // continuous along the table
  bool infinite = false;             // pole on the sampled point
};

enum class Spacing { Log, Linear };

// n frequencies from f_min to 0.5 (both included).
std::vector<FrequencyRow> bode_table(const RationalTF& tf, double f_min = 1e-4, int n = 500,
                                     Spacing spacing = Spacing::Log);

// f_hz,mag_db,phase_deg,phase_unwrapped_deg
void write_bode_csv(const std::vector<FrequencyRow>& rows, std::ostream& out);

// Smallest f in (0, 0.5] with |tf(e^{i 2 pi f})| = 1, located on a log grid
// reaching down to 1e-9 and refined by bisection to 1e-8 relative in f.
std::optional<double> crossover_frequency(const RationalTF& tf);

struct GainMetrics {
  double low_gain_db = 0.0;
  double high_gain_db = 0.0;
  std::optional<double> crossover;
  // Magnitude slope across a half-decade bracket centred on the crossover
  // (upper end clipped at Nyquist).
  std::optional<double> slope_at_crossover_db_per_decade;
};

GainMetrics gain_metrics(const RationalTF& tf, double f_low = 1e-3, double f_high = 0.5);

struct BodeCurve {
  std::string label;
  std::vector<FrequencyRow> rows;
};

// Magnitude plot on a log-frequency axis, one polyline per curve, with a
// legend. Self-contained SVG, no timestamps.
void write_bode_svg(const std::vector<BodeCurve>& curves, std::ostream& out, const std::string& title = "");

}  // namespace loopshift
