#pragma once

#include <iosfwd>
#include <string>

#include "metastab/dynamics.hpp"

namespace metastab {

/// CSV with header `k,t,w_1,...,w_d`, 17 significant digits, '\n' endings.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

/// Little-endian binary dump:
///   "LNGVTRJ1" | u8 kind | u8 noiseless | u16 reserved | u32 d | u64 count
///   | u64 seed | u64 horizon_K | u32 substep_factor | u32 noise_substeps
///   | f64 eta | f64 beta | f64 initial_point[d] | count x (f64 t, f64 w[d])
void write_trajectory_binary(const Trajectory& traj, std::ostream& out);
void write_trajectory_binary(const Trajectory& traj, const std::string& path);

/// Inverse of write_trajectory_binary. Throws PreconditionError on a bad
/// magic header, unknown kind or truncated payload.
Trajectory read_trajectory_binary(std::istream& in);
Trajectory read_trajectory_binary(const std::string& path);

}  // namespace metastab
