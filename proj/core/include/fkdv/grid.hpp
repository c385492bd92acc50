#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fkdv {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Uniform periodic grid on [-L, L) with n collocation points, spacing
// h = 2L/n.  Fourier wavenumbers are k_j = pi*j/L for j = -n/2 .. n/2-1;
// real-data transforms store the half-spectrum j = 0 .. n/2, where the
// j = n/2 slot carries the Nyquist mode.
struct Grid {
  double half_length = 0.0;  // L
  int n = 0;                 // collocation points, even, >= 16

  Grid() = default;
  Grid(double half_length_, int n_)
      : half_length(half_length_), n(n_) {
    if (!(half_length > 0.0))
      throw std::invalid_argument("Grid: half_length must be positive");
    if (n < 16 || n % 2 != 0)
      throw std::invalid_argument("Grid: n must be even and >= 16, got " +
                                  std::to_string(n));
  }

  double spacing() const { return 2.0 * half_length / n; }
  double x(int i) const { return -half_length + i * spacing(); }
  // Wavenumber for half-spectrum index j in [0, n/2].
  double wavenumber(int j) const { return kPi * j / half_length; }
  int mode_count() const { return n / 2 + 1; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

// Real-valued samples on a grid.  Value semantics; operations on profiles
// are pure functions returning new instances.
struct Profile {
  Grid grid;
  std::vector<double> values;

  Profile() = default;
  Profile(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != grid.n)
      throw std::invalid_argument("Profile: value count does not match grid");
  }
  explicit Profile(Grid g) : grid(g), values(g.n, 0.0) {}

  int size() const { return grid.n; }
};

// Index of the mirror point of i under x -> -x on the periodic grid.
inline int reflect_index(int i, int n) { return (n - i) % n; }

}  // namespace fkdv
