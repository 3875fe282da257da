#include "metastab/trajectory_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <istream>

#include "metastab/errors.hpp"

namespace metastab {

namespace {

constexpr std::array<char, 8> kMagic{'L', 'N', 'G', 'V', 'T', 'R', 'J', '1'};

static_assert(std::endian::native == std::endian::little, "binary trajectory format assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw PreconditionError("trajectory file is truncated");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  const Eigen::Index d = traj.points.rows();
  out << "k,t";
  for (Eigen::Index j = 0; j < d; ++j) out << ",w_" << (j + 1);
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << i << ',' << traj.times[i];
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << traj.points(j, static_cast<Eigen::Index>(i));
    out << '\n';
  }
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  auto out = open_out(path, std::ios::binary);
  write_trajectory_csv(traj, out);
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_trajectory_binary(const Trajectory& traj, std::ostream& out) {
  const auto d = static_cast<std::uint32_t>(traj.points.rows());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint8_t>(out, static_cast<std::uint8_t>(traj.kind));
  put<std::uint8_t>(out, traj.config.noiseless ? 1 : 0);
  put<std::uint16_t>(out, 0);
  put<std::uint32_t>(out, d);
  put<std::uint64_t>(out, traj.size());
  put<std::uint64_t>(out, traj.config.seed);
  put<std::uint64_t>(out, traj.config.horizon_K);
  put<std::uint32_t>(out, traj.substep_factor);
  put<std::uint32_t>(out, traj.config.noise_substeps);
  put<double>(out, traj.config.eta);
  put<double>(out, traj.config.beta);
  for (std::uint32_t j = 0; j < d; ++j) {
    put<double>(out, j < traj.config.initial_point.size() ? traj.config.initial_point(j) : 0.0);
  }
  for (std::size_t i = 0; i < traj.size(); ++i) {
    put<double>(out, traj.times[i]);
    for (std::uint32_t j = 0; j < d; ++j) put<double>(out, traj.points(j, static_cast<Eigen::Index>(i)));
  }
}

void write_trajectory_binary(const Trajectory& traj, const std::string& path) {
  auto out = open_out(path, std::ios::binary);
  write_trajectory_binary(traj, out);
  if (!out) throw std::runtime_error("failed writing " + path);
}

Trajectory read_trajectory_binary(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw PreconditionError("not a trajectory dump (bad magic header)");
  }
  Trajectory traj;
  const auto kind = get<std::uint8_t>(in);
  if (kind > 2) throw PreconditionError("trajectory dump has an unknown kind");
  traj.kind = static_cast<TrajectoryKind>(kind);
  traj.config.noiseless = get<std::uint8_t>(in) != 0;
  get<std::uint16_t>(in);
  const auto d = get<std::uint32_t>(in);
  const auto count = get<std::uint64_t>(in);
  traj.config.seed = get<std::uint64_t>(in);
  traj.config.horizon_K = get<std::uint64_t>(in);
  traj.substep_factor = get<std::uint32_t>(in);
  traj.config.noise_substeps = get<std::uint32_t>(in);
  traj.config.eta = get<double>(in);
  traj.config.beta = get<double>(in);
  traj.config.initial_point.resize(d);
  for (std::uint32_t j = 0; j < d; ++j) traj.config.initial_point(j) = get<double>(in);
  traj.times.resize(count);
  traj.points.resize(d, static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    traj.times[i] = get<double>(in);
    for (std::uint32_t j = 0; j < d; ++j) traj.points(j, static_cast<Eigen::Index>(i)) = get<double>(in);
  }
  return traj;
}

Trajectory read_trajectory_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open trajectory file " + path);
  return read_trajectory_binary(in);
}

}  // namespace metastab
