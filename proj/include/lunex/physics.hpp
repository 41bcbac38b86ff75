#pragma once

namespace lunex::logistics {

inline constexpr double kG0 = 9.80665;  // m/s^2

/// Propellant consumed to accelerate wet_mass by delta_v at the given Isp:
/// wet_mass * (1 - e^(-dv / (g0 Isp))). Unit-agnostic in mass.
/// Throws std::domain_error on negative mass/delta-v or nonpositive Isp.
double propellant_burn(double wet_mass, double delta_v_kms, double isp_s);

/// Fraction of an arc's wet mass burned as propellant.
double burn_fraction(double delta_v_kms, double isp_s);

struct IsruYield {
  double water = 0.0;      // electrolyzed water mass
  double h2 = 0.0;         // 1/9 of the water by mass
  double o2_usable = 0.0;  // capped at ox_fuel_ratio * h2
  double o2_excess = 0.0;  // oxygen beyond the engine mixture ratio
};

/// Water electrolysis output of a plant over a duration. Water splits 1:8 in
/// mass to H2:O2; usable oxidizer is limited by the engine mixture ratio.
IsruYield isru_yield(double plant_mass, double duration_days, double productivity_per_yr,
                     double ox_fuel_ratio);

/// Annual maintenance-spares demand of a plant.
double maintenance_demand(double plant_mass, double rate_per_yr);

}  // namespace lunex::logistics
