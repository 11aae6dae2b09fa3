#pragma once

#include "bdris/common.hpp"

#include <cstdint>
#include <random>

namespace bdris::channel {

struct Point2 {
  double x;
  double y;
};

double distance(const Point2& a, const Point2& b);

/// Transmitter, RIS and receiver positions in meters.
struct Geometry {
  Point2 tx;
  Point2 ris;
  Point2 rx;

  // [0,-60], [300,10], [300,0]
  static Geometry reference();

  // Throws invalid_argument when two terminals coincide.
  void validate() const;
};

struct Dims {
  int n_t;
  int n_i;
  int n_r;
};

/// Small-scale Rician fading with mean power gain `pathloss_linear`.
struct FadingSpec {
  double kappa = 0.0;
  double pathloss_linear = 1.0;
  int rows = 1;
  int cols = 1;
  CMatrix los;  // unit-modulus rows x cols; all-ones when empty
};

enum class Link : std::uint64_t { rt = 1, ri = 2, it = 3 };

/// Independent random stream keyed by (master seed, trial, link). Streams with
/// different keys never share state, so trials may be generated in any order
/// or on any thread.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t trial, std::uint64_t link);

  double uniform();         // (0, 1)
  Complex complex_normal();  // CN(0, 1)

 private:
  std::mt19937_64 engine_;
};

/// 41.2 + 28.7 log10(d)
double pathloss_db(double meters);
double pathloss_gain(double meters);

/// Unit-modulus rank-one LOS matrix a_r(arrival) a_t(departure)^H of two
/// half-wavelength uniform linear arrays.
CMatrix los_matrix(int rows, int cols, double arrival_rad, double departure_rad);

CMatrix draw_rician(const FadingSpec& spec, RandomStream& stream);

struct ChannelRealization {
  CMatrix h_rt;  // N_R x N_T
  CMatrix h_ri;  // N_R x N_I
  CMatrix h_it;  // N_I x N_T
  std::uint64_t master_seed = 0;
  std::uint64_t trial = 0;
};

ChannelRealization generate_realization(const Geometry& geometry, const Dims& dims, double kappa,
                                        std::uint64_t master_seed, std::uint64_t trial);

}  // namespace bdris::channel
