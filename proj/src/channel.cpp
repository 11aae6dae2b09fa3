#include "bdris/channel.hpp"

#include <cmath>
#include <numbers>

namespace bdris::channel {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Geometry Geometry::reference() { return Geometry{{0.0, -60.0}, {300.0, 10.0}, {300.0, 0.0}}; }

void Geometry::validate() const {
  require(distance(tx, ris) > 0.0 && distance(tx, rx) > 0.0 && distance(ris, rx) > 0.0,
          ErrorCode::invalid_argument, "terminal positions must be pairwise distinct");
}

namespace {

std::seed_seq make_seed(std::uint64_t master_seed, std::uint64_t trial, std::uint64_t link) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  return std::seed_seq{lo(master_seed), hi(master_seed), lo(trial), hi(trial), lo(link), hi(link)};
}

double angle_to(const Point2& from, const Point2& to) {
  return std::atan2(to.y - from.y, to.x - from.x);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t master_seed, std::uint64_t trial, std::uint64_t link) {
  auto seq = make_seed(master_seed, trial, link);
  engine_.seed(seq);
}

double RandomStream::uniform() {
  // 53 random bits, shifted off zero so log() below stays finite.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

Complex RandomStream::complex_normal() {
  const double radius = std::sqrt(-std::log(uniform()));
  const double phase = 2.0 * std::numbers::pi * uniform();
  return {radius * std::cos(phase), radius * std::sin(phase)};
}

double pathloss_db(double meters) {
  require(meters > 0.0, ErrorCode::invalid_argument, "distance must be positive");
  return 41.2 + 28.7 * std::log10(meters);
}

double pathloss_gain(double meters) { return db_to_linear(-pathloss_db(meters)); }

CMatrix los_matrix(int rows, int cols, double arrival_rad, double departure_rad) {
  CVector a_r(rows), a_t(cols);
  for (int m = 0; m < rows; ++m) {
    a_r(m) = std::exp(kJ * (std::numbers::pi * m * std::sin(arrival_rad)));
  }
  for (int n = 0; n < cols; ++n) {
    a_t(n) = std::exp(kJ * (std::numbers::pi * n * std::sin(departure_rad)));
  }
  return a_r * a_t.adjoint();
}

CMatrix draw_rician(const FadingSpec& spec, RandomStream& stream) {
  require(spec.kappa >= 0.0 && spec.pathloss_linear >= 0.0 && spec.rows > 0 && spec.cols > 0,
          ErrorCode::invalid_argument, "invalid fading spec");
  require(spec.los.size() == 0 || (spec.los.rows() == spec.rows && spec.los.cols() == spec.cols),
          ErrorCode::dimension_mismatch, "LOS matrix does not match fading dims");

  CMatrix nlos(spec.rows, spec.cols);
  for (int c = 0; c < spec.cols; ++c) {
    for (int r = 0; r < spec.rows; ++r) nlos(r, c) = stream.complex_normal();
  }
  const double w_los = std::sqrt(spec.kappa / (spec.kappa + 1.0));
  const double w_nlos = std::sqrt(1.0 / (spec.kappa + 1.0));
  const double amplitude = std::sqrt(spec.pathloss_linear);
  if (spec.los.size() == 0) {
    return amplitude * (CMatrix::Constant(spec.rows, spec.cols, Complex(w_los, 0.0)) + w_nlos * nlos);
  }
  return amplitude * (w_los * spec.los + w_nlos * nlos);
}

ChannelRealization generate_realization(const Geometry& geometry, const Dims& dims, double kappa,
                                        std::uint64_t master_seed, std::uint64_t trial) {
  geometry.validate();
  require(dims.n_t > 0 && dims.n_r > 0 && dims.n_i >= 0, ErrorCode::invalid_argument,
          "antenna counts must be positive");

  auto link = [&](Link id, const Point2& from, const Point2& to, int rows, int cols) -> CMatrix {
    if (rows == 0 || cols == 0) return CMatrix(rows, cols);
    FadingSpec spec;
    spec.kappa = kappa;
    spec.pathloss_linear = pathloss_gain(distance(from, to));
    spec.rows = rows;
    spec.cols = cols;
    spec.los = los_matrix(rows, cols, angle_to(to, from), angle_to(from, to));
    RandomStream stream(master_seed, trial, static_cast<std::uint64_t>(id));
    return draw_rician(spec, stream);
  };

  ChannelRealization out;
  out.h_rt = link(Link::rt, geometry.tx, geometry.rx, dims.n_r, dims.n_t);
  out.h_ri = link(Link::ri, geometry.ris, geometry.rx, dims.n_r, dims.n_i);
  out.h_it = link(Link::it, geometry.tx, geometry.ris, dims.n_i, dims.n_t);
  out.master_seed = master_seed;
  out.trial = trial;
  return out;
}

}  // namespace bdris::channel
