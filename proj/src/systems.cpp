#include "timefreeze/systems.hpp"
#include <type_traits>

namespace timefreeze {

TimeFrozenSystem make_bouncing_ball(double gamma, double k, double gravity, StepMode mode) {
  FieldFunc f = FieldFunc::make(2, 0, [gravity](auto x, auto, auto out) {
    using T = std::remove_cvref_t<decltype(out[0])>;
    out[0] = x[1];
    out[1] = T(-gravity);
  });
  auto sys = make_state_jump_system(2, 0, std::move(f), {make_constraint({1.0}, 0.0)}, gamma);
  return assemble_time_frozen(std::move(sys), k, mode);
}

TimeFrozenSystem make_particle_3d(double gamma, double k, double mass, double gravity, StepMode mode) {
  FieldFunc f = FieldFunc::make(6, 3, [mass, gravity](auto x, auto u, auto out) {
    out[0] = x[3];
    out[1] = x[4];
    out[2] = x[5];
    out[3] = u[0] / mass;
    out[4] = u[1] / mass;
    out[5] = u[2] / mass - gravity;
  });
  std::vector<AffineConstraint> walls = {
      make_constraint({1.0, 0.0, 0.0}, 0.0),  // y-z plane wall
      make_constraint({0.0, 1.0, 0.0}, 0.0),  // x-z plane wall
      make_constraint({0.0, 0.0, 1.0}, 0.0),  // floor
  };
  auto sys = make_state_jump_system(6, 3, std::move(f), std::move(walls), gamma);
  return assemble_time_frozen(std::move(sys), k, mode);
}

}  // namespace timefreeze
