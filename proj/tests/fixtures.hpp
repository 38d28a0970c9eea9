#pragma once
#include <string>

#include "topoarray/units.hpp"

namespace fx {

inline topo::Config base_config(double delta_thz, double muB) {
  topo::Config c;
  c.set("lambda_nm", 738.0);
  c.set("gamma_over_2pi_hz", 300e6);
  c.set("n_d", 2.4);
  c.set("v_s_over_c", 0.25);
  c.set("e0_sq_a3", 0.1855);
  c.set("delta_a_over_2pi_thz", delta_thz);
  c.set("mu_b_over_gamma", muB);
  return c;
}

inline topo::PhysicalParams params(double delta_thz, double muB) {
  return topo::derive_params(base_config(delta_thz, muB));
}

}  // namespace fx
