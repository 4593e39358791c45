#pragma once

// CSV writers for simulation, solver and report outputs. Doubles are written
// with %.17g so reruns with the same seed produce identical bytes.

#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "coalcoag/coag_solver.hpp"
#include "coalcoag/coalescent.hpp"
#include "coalcoag/kingman.hpp"

namespace coalcoag {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string join_values(std::span<const double> xs) {
  std::string s;
  for (std::size_t h = 0; h < xs.size(); ++h) {
    if (h) s += '|';
    s += format_double(xs[h]);
  }
  return s;
}

/// "n1|n2|...|nd" style header field.
inline std::string vector_header(const std::string& stem, std::size_t d) {
  std::string s;
  for (std::size_t h = 1; h <= d; ++h) {
    if (h > 1) s += '|';
    s += stem + std::to_string(h);
  }
  return s;
}

inline void write_event_log_header(std::ostream& os) { os << "t_unscaled,kind,i,j,c1,c2\n"; }

inline void write_event(std::ostream& os, const Event& ev) {
  os << format_double(ev.time) << ',' << (ev.kind == EventKind::Migration ? "migration" : "coalescence") << ','
     << ev.from << ',' << ev.to << ',' << config_to_string(ev.first) << ','
     << (ev.second.empty() ? std::string() : config_to_string(ev.second)) << '\n';
}

inline void write_snapshot(std::ostream& os, const CoalescentState& s) {
  os << "colony,config,count\n";
  for (std::size_t i = 0; i < s.colonies.size(); ++i)
    for (const auto& [config, n] : s.colonies[i].blocks) os << i << ',' << config_to_string(config) << ',' << n << '\n';
}

inline void write_coupling(std::ostream& os, const CoupledPaths& paths) {
  os << "t,lhat,l_total,ltilde\n";
  for (const auto& r : paths.records)
    os << format_double(r.time) << ',' << r.lhat << ',' << r.l_total() << ',' << r.ltilde << '\n';
}

inline void write_emigrant_bound(std::ostream& os, const EmigrantBoundPath& path) {
  os << "t,ehat\n";
  for (std::size_t k = 0; k < path.times.size(); ++k) os << format_double(path.times[k]) << ',' << path.values[k] << '\n';
}

inline void write_discrete(std::ostream& os, const DiscreteSolution& sol) {
  const std::size_t d = sol.lattice.d();
  os << "t,colony," << vector_header("n", d) << ",u\n";
  for (std::size_t k = 0; k < sol.times.size(); ++k)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t idx = 0; idx < sol.lattice.size(); ++idx)
        os << format_double(sol.times[k]) << ',' << i << ',' << config_to_string(sol.lattice.point(idx)) << ','
           << format_double(sol.u[k][i][idx]) << '\n';
}

inline void write_mass(std::ostream& os, const std::vector<double>& times, const std::vector<std::vector<double>>& rho) {
  os << "t,colony,rho\n";
  for (std::size_t k = 0; k < times.size(); ++k)
    for (std::size_t i = 0; i < rho[k].size(); ++i)
      os << format_double(times[k]) << ',' << i << ',' << format_double(rho[k][i]) << '\n';
}

inline void write_exponent_header(std::ostream& os, std::size_t d) {
  os << "t,colony," << vector_header("lambda", d) << ",v\n";
}

inline void write_exponent(std::ostream& os, std::span<const double> lambda, const OdePath& path) {
  const std::string key = join_values(lambda);
  for (std::size_t k = 0; k < path.times.size(); ++k)
    for (std::size_t i = 0; i < path.v[k].size(); ++i)
      os << format_double(path.times[k]) << ',' << i << ',' << key << ',' << format_double(path.v[k][i]) << '\n';
}

inline void write_branching_states(std::ostream& os, std::size_t colony,
                                   const std::vector<std::vector<std::int64_t>>& states, bool header = true) {
  if (header && !states.empty()) os << "replicate,colony," << vector_header("n", states.front().size()) << '\n';
  for (std::size_t r = 0; r < states.size(); ++r) os << r << ',' << colony << ',' << config_to_string(states[r]) << '\n';
}

inline void write_diffusion_states(std::ostream& os, const std::vector<std::vector<double>>& states) {
  if (states.empty()) return;
  os << "replicate";
  for (std::size_t h = 1; h <= states.front().size(); ++h) os << ",z" << h;
  os << '\n';
  for (std::size_t r = 0; r < states.size(); ++r) {
    os << r;
    for (double z : states[r]) os << ',' << format_double(z);
    os << '\n';
  }
}

}  // namespace coalcoag
