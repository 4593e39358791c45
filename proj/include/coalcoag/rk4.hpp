#pragma once

#include <cstddef>
#include <vector>

namespace coalcoag {

/// Classical fixed-step fourth-order Runge-Kutta on a flat state vector.
/// system(x, dxdt, t) must fill dxdt.
class RungeKutta4 {
 public:
  using State = std::vector<double>;

  explicit RungeKutta4(std::size_t n) : n_(n), tmp_(n), k1_(n), k2_(n), k3_(n), k4_(n) {}

  template <class System>
  void do_step(System&& system, State& x, double t, double dt) {
    const double dt2 = dt / 2;
    const double dt3 = dt / 3;
    const double dt6 = dt / 6;

    system(x, k1_, t);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + dt2 * k1_[i];

    system(tmp_, k2_, t + dt2);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + dt2 * k2_[i];

    system(tmp_, k3_, t + dt2);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + dt * k3_[i];

    system(tmp_, k4_, t + dt);
    for (std::size_t i = 0; i < n_; ++i) x[i] += dt6 * k1_[i] + dt3 * k2_[i] + dt3 * k3_[i] + dt6 * k4_[i];
  }

 private:
  std::size_t n_;
  State tmp_, k1_, k2_, k3_, k4_;
};

}  // namespace coalcoag
