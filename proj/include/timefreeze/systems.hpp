#pragma once

#include "timefreeze/dynamics.hpp"

namespace timefreeze {

/// Ball of mass m bouncing on a table: state (q, v), free flight
/// (v, -g), single constraint q >= 0, Newton restitution.
TimeFrozenSystem make_bouncing_ball(double gamma, double k, double gravity = 9.81,
                                    StepMode mode = StepMode::Sign);

/// 3-D particle of mass m steered by a bounded force u, gravity along -z:
/// state (q, v) in R^6, free flight (v, u/m - g e_z), walls q_x >= 0,
/// q_y >= 0 and floor q_z >= 0.
TimeFrozenSystem make_particle_3d(double gamma, double k, double mass = 1.0, double gravity = 9.81,
                                  StepMode mode = StepMode::Sign);

}  // namespace timefreeze
