#pragma once

// Fourier-spectral primitives on the periodic grid.
//
// The fractional derivative D^s is the Fourier multiplier |k|^s; for s = 2
// it coincides with -d2/dx2.  Even multipliers (|k|^s, inverse symbols)
// act on the full stored half-spectrum including the Nyquist slot; odd
// multipliers (ik from d/dx) zero the Nyquist mode, which has no
// sign-definite imaginary partner on the real grid.
//
// Quadrature is the trapezoid/rectangle rule h*sum, which is spectrally
// accurate for smooth periodic integrands and exactly matches the
// Parseval mode sum for quadratic quantities.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "fkdv/grid.hpp"

namespace fkdv {

// Unnormalised DFT coefficients, half-spectrum storage j = 0 .. n/2.
using ModeVector = std::vector<std::complex<double>>;

// Sobolev pairing index: (D^s u, D^s v)_{L2} + weight * (u, v)_{L2}.
// order = sigma/2 with weight = c gives the H^{sigma/2}_c inner product.
struct SobolevIndex {
  double order = 0.0;   // s in [0, 4]
  double weight = 0.0;  // zero-order coefficient, >= 0

  SobolevIndex(double order_, double weight_ = 0.0)
      : order(order_), weight(weight_) {
    if (!(order >= 0.0 && order <= 4.0))
      throw std::invalid_argument("SobolevIndex: order must lie in [0, 4]");
    if (!(weight >= 0.0))
      throw std::invalid_argument("SobolevIndex: weight must be >= 0");
  }
};

ModeVector to_modes(const Profile& v);
Profile from_modes(const Grid& grid, const ModeVector& modes);

// Apply a real even Fourier multiplier symbol(|k|).
Profile apply_symbol(const Profile& v,
                     const std::function<double(double)>& symbol);

// D^s v = F^{-1}[ |k|^s F v ],  s in [0, 4].
Profile fractional_derivative(const Profile& v, double s);

// d^order/dx^order; odd orders zero the Nyquist mode.
Profile derivative(const Profile& v, int order = 1);

// (D^sigma + shift)^{-1} v, shift > 0.
Profile invert_symbol(const Profile& v, double sigma, double shift);

double sobolev_inner(const Profile& u, const Profile& v, SobolevIndex idx);
inline double sobolev_norm(const Profile& v, SobolevIndex idx) {
  double s = sobolev_inner(v, v, idx);
  return s > 0.0 ? std::sqrt(s) : 0.0;
}

// h * sum_i u_i v_i
double l2_inner(const Profile& u, const Profile& v);
// h * sum_i v_i^m  (signed power integral)
double lp_integral(const Profile& v, int m);

// Translate: (shift(v, y))(x) = v(x - y), by exact phase in mode space.
Profile shift(const Profile& v, double y);

// Evaluate the trigonometric interpolant at an arbitrary point.
double eval_trig(const Profile& v, double y);
// Same from precomputed modes (avoids re-transforming in hot loops).
double eval_trig(const Grid& grid, const ModeVector& modes, double y);

// Change resolution by mode padding/truncation on the same [-L, L).
Profile resample(const Profile& v, int n_new);

// v <- (v(x) + v(-x))/2 on the periodic grid.
void even_symmetrize(Profile& v);
double max_asymmetry(const Profile& v);

double max_abs(const Profile& v);
bool all_finite(const Profile& v);

// Pointwise helpers (value semantics).
Profile pointwise_pow(const Profile& v, int m);
Profile operator+(const Profile& a, const Profile& b);
Profile operator-(const Profile& a, const Profile& b);
Profile operator*(double s, const Profile& a);

// Smallest FFT-friendly (2^a 3^b 5^c, even) size >= m.
int next_fft_size(int m);

}  // namespace fkdv
