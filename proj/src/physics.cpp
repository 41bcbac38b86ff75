#include "lunex/physics.hpp"

#include <cmath>
#include <stdexcept>

namespace lunex::logistics {

double burn_fraction(double delta_v_kms, double isp_s) {
  if (delta_v_kms < 0.0) throw std::domain_error("delta_v must be nonnegative");
  if (isp_s <= 0.0) throw std::domain_error("Isp must be positive");
  return 1.0 - std::exp(-delta_v_kms * 1000.0 / (kG0 * isp_s));
}

double propellant_burn(double wet_mass, double delta_v_kms, double isp_s) {
  if (wet_mass < 0.0) throw std::domain_error("wet mass must be nonnegative");
  return wet_mass * burn_fraction(delta_v_kms, isp_s);
}

IsruYield isru_yield(double plant_mass, double duration_days, double productivity_per_yr,
                     double ox_fuel_ratio) {
  if (plant_mass < 0.0 || duration_days < 0.0 || productivity_per_yr < 0.0)
    throw std::domain_error("isru_yield inputs must be nonnegative");
  IsruYield y;
  y.water = plant_mass * productivity_per_yr * duration_days / 365.0;
  y.h2 = y.water / 9.0;
  const double o2_total = y.water * 8.0 / 9.0;
  y.o2_usable = std::min(o2_total, ox_fuel_ratio * y.h2);
  y.o2_excess = o2_total - y.o2_usable;
  return y;
}

double maintenance_demand(double plant_mass, double rate_per_yr) {
  if (plant_mass < 0.0 || rate_per_yr < 0.0)
    throw std::domain_error("maintenance inputs must be nonnegative");
  return plant_mass * rate_per_yr;
}

}  // namespace lunex::logistics
