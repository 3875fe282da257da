#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>

#include "metastab/dynamics.hpp"
#include "metastab/errors.hpp"
#include "metastab/trajectory_io.hpp"

using namespace metastab;

namespace {

Trajectory sample_trajectory(TrajectoryKind kind) {
  const auto dw = build_double_well(2, 1.0);
  LangevinConfig c;
  c.eta = 0.05;
  c.beta = 3.0;
  c.horizon_K = 12;
  c.initial_point = Vector::Constant(2, 0.7);
  c.seed = 77;
  c.noise_substeps = 2;
  if (kind == TrajectoryKind::diffusion_proxy) return run_diffusion_proxy(*dw, c, 4);
  return run_discrete_langevin(*dw, c);
}

}  // namespace

TEST_CASE("csv layout") {
  const Trajectory t = sample_trajectory(TrajectoryKind::discrete);
  std::ostringstream os;
  write_trajectory_csv(t, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "k,t,w_1,w_2");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    CHECK(line.find('\r') == std::string::npos);
    CHECK(std::count(line.begin(), line.end(), ',') == 3);
    ++rows;
  }
  CHECK(rows == t.size());
  std::istringstream again(os.str());
  std::getline(again, line);
  std::getline(again, line);
  CHECK(line.rfind("0,0,", 0) == 0);
}

TEST_CASE("csv values round trip at 17 digits") {
  const Trajectory t = sample_trajectory(TrajectoryKind::discrete);
  std::ostringstream os;
  write_trajectory_csv(t, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  for (std::size_t k = 0; k < t.size(); ++k) {
    std::getline(is, line);
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    CHECK(std::stoul(cell) == k);
    std::getline(row, cell, ',');
    CHECK(std::stod(cell) == t.times[k]);
    for (Eigen::Index j = 0; j < 2; ++j) {
      std::getline(row, cell, ',');
      CHECK(std::stod(cell) == t.points(j, static_cast<Eigen::Index>(k)));
    }
  }
}

TEST_CASE("binary round trip is exact") {
  for (TrajectoryKind kind : {TrajectoryKind::discrete, TrajectoryKind::diffusion_proxy}) {
    const Trajectory t = sample_trajectory(kind);
    std::stringstream ss;
    write_trajectory_binary(t, ss);
    const Trajectory back = read_trajectory_binary(ss);
    CHECK(back.kind == t.kind);
    CHECK(back.substep_factor == t.substep_factor);
    CHECK(back.times == t.times);
    CHECK(back.points == t.points);
    CHECK(back.config.eta == t.config.eta);
    CHECK(back.config.beta == t.config.beta);
    CHECK(back.config.noiseless == t.config.noiseless);
    CHECK(back.config.horizon_K == t.config.horizon_K);
    CHECK(back.config.seed == t.config.seed);
    CHECK(back.config.noise_substeps == t.config.noise_substeps);
    CHECK(back.config.initial_point == t.config.initial_point);
  }
}

TEST_CASE("binary header is little endian with the documented magic") {
  const Trajectory t = sample_trajectory(TrajectoryKind::discrete);
  std::ostringstream os;
  write_trajectory_binary(t, os);
  const std::string bytes = os.str();
  REQUIRE(bytes.size() > 16);
  CHECK(bytes.substr(0, 8) == "LNGVTRJ1");
  CHECK(static_cast<unsigned char>(bytes[8]) == 0);
  CHECK(static_cast<unsigned char>(bytes[12]) == 2);
  CHECK(static_cast<unsigned char>(bytes[13]) == 0);
  const std::size_t header = 8 + 1 + 1 + 2 + 4 + 8 + 8 + 8 + 4 + 4 + 8 + 8 + 2 * 8;
  CHECK(bytes.size() == header + t.size() * 3 * 8);
}

TEST_CASE("corrupt binary input is rejected") {
  const Trajectory t = sample_trajectory(TrajectoryKind::discrete);
  std::ostringstream os;
  write_trajectory_binary(t, os);
  std::string bytes = os.str();

  std::string bad = bytes;
  bad[0] = 'X';
  std::istringstream a(bad);
  CHECK_THROWS_AS(read_trajectory_binary(a), PreconditionError);

  std::istringstream b(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(read_trajectory_binary(b), PreconditionError);

  std::string kind = bytes;
  kind[8] = 9;
  std::istringstream c(kind);
  CHECK_THROWS_AS(read_trajectory_binary(c), PreconditionError);

  std::istringstream empty("");
  CHECK_THROWS_AS(read_trajectory_binary(empty), PreconditionError);
}
