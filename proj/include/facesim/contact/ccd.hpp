#pragma once

#include "facesim/common.hpp"
#include "facesim/contact/barrier.hpp"

namespace facesim::contact {

/// Real roots of c3 t^3 + c2 t^2 + c1 t + c0 on [0, 1], ascending. Monotone
/// interval splitting with bisection, robust to degenerate leading terms.
std::vector<double> cubic_roots_unit_interval(double c3, double c2, double c1, double c0);

/// Largest step alpha in (0, 1] such that moving the masked proxy linearly
/// from p_start to p_end stays penetration-free on [0, alpha]. Returns 0.9x
/// the earliest time of impact, or 1 if there is none. p_start must itself
/// be penetration-free.
double ccd_max_step(const ContactProxy& proxy, const VecX& p_start, const VecX& p_end);

}  // namespace facesim::contact
