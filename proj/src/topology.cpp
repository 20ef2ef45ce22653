#include "qsky/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "qsky/source.hpp"

namespace qsky {

std::size_t StokesField::masked_count() const {
  std::size_t count = 0;
  for (auto m : mask) count += m != 0;
  return count;
}

StokesSample stokes_sample(const DensityMatrix& rho, int ell1, int ell2, double waist, double x, double y) {
  const double r = std::hypot(x, y) * waist;
  const double phi = std::atan2(y, x);
  const cplx u[2] = {lg_amplitude_unenveloped({ell1, waist}, r, phi),
                     lg_amplitude_unenveloped({ell2, waist}, r, phi)};
  Matrix2c m = Matrix2c::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) m(i, j) += u[a] * rho(2 * i + a, 2 * j + b) * std::conj(u[b]);

  StokesSample out;
  out.intensity = (m(0, 0) + m(1, 1)).real();
  if (out.intensity <= 0.0) {
    out.raw.setZero();
    return out;
  }
  out.raw << 2.0 * m(0, 1).real(), -2.0 * m(0, 1).imag(), (m(0, 0) - m(1, 1)).real();
  out.raw /= out.intensity;
  return out;
}

StokesField stokes_field(const DensityMatrix& rho, int ell1, int ell2, double waist, const GridSpec& grid) {
  if (!(waist > 0.0)) throw Error(Errc::BadConfig, "waist must be positive");
  if (grid.n < 7 || !(grid.extent > 0.0)) throw Error(Errc::BadConfig, "grid needs n >= 7 and extent > 0");
  StokesField field;
  field.n = grid.n;
  field.extent = grid.extent;
  field.waist = waist;
  field.ell1 = ell1;
  field.ell2 = ell2;
  const Eigen::Index points = static_cast<Eigen::Index>(grid.n) * grid.n;
  field.vectors.setZero(points, 3);
  field.raw.setZero(points, 3);
  field.mask.assign(static_cast<std::size_t>(points), 0);

  for (int j = 0; j < grid.n; ++j) {
    const double y = field.coordinate(j);
    for (int i = 0; i < grid.n; ++i) {
      const Eigen::Index k = field.index(i, j);
      const StokesSample s = stokes_sample(rho, ell1, ell2, waist, field.coordinate(i), y);
      field.raw.row(k) = s.raw.transpose();
      const double norm = s.raw.norm();
      if (s.intensity < kIntensityFloor || norm < kPolarizationFloor) {
        field.mask[static_cast<std::size_t>(k)] = 1;
        continue;
      }
      field.vectors.row(k) = (s.raw / norm).transpose();
    }
  }
  return field;
}

namespace {

void require_populated(const StokesField& field) {
  const std::size_t total = field.mask.size();
  if (total == 0) throw Error(Errc::TooDegenerate, "empty field");
  const std::size_t masked = field.masked_count();
  if (2 * masked >= total)
    throw Error(Errc::TooDegenerate, std::to_string(masked) + " of " + std::to_string(total) +
                                         " points carry no polarisation texture");
}

// Two nodes on each side feed the fourth-order stencil, so the integral
// runs over nodes [2, n−3]² and that ring also closes the exterior.
constexpr int kBorder = 2;

// f'(0) ≈ (8(f₁ − f₋₁) − (f₂ − f₋₂)) / 12h, returned without the 1/12h.
template <typename At>
Eigen::Vector3d stencil(At at) {
  return 8.0 * (at(1) - at(-1)) - (at(2) - at(-2));
}

// (1/4π) Σ w S·(∂xS × ∂yS) h², trapezoidal weights.
double interior_integral(const StokesField& field, const Eigen::MatrixX3d& s) {
  const int lo = kBorder, hi = field.n - 1 - kBorder;
  auto masked = [&](int i, int j) { return field.mask[static_cast<std::size_t>(field.index(i, j))] != 0; };
  double sum = 0.0;
  for (int j = lo; j <= hi; ++j) {
    const double wy = (j == lo || j == hi) ? 0.5 : 1.0;
    for (int i = lo; i <= hi; ++i) {
      bool skip = masked(i, j);
      for (int d = -kBorder; d <= kBorder && !skip; ++d) skip = masked(i + d, j) || masked(i, j + d);
      if (skip) continue;
      const double wx = (i == lo || i == hi) ? 0.5 : 1.0;
      const Eigen::Vector3d c = s.row(field.index(i, j));
      const Eigen::Vector3d dx =
          stencil([&](int d) -> Eigen::Vector3d { return s.row(field.index(i + d, j)); });
      const Eigen::Vector3d dy =
          stencil([&](int d) -> Eigen::Vector3d { return s.row(field.index(i, j + d)); });
      sum += wx * wy * c.dot(dx.cross(dy));
    }
  }
  // each derivative carries 1/(12h); the area element is h²
  return sum / 144.0 / (4.0 * std::numbers::pi);
}

// Signed solid angle of the spherical triangle (a, b, c).
double triangle_solid_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const double num = a.dot(b.cross(c));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

// Unmasked vectors on the integration boundary, clockwise in the plane so
// that the exterior region lies on the left.
std::vector<Eigen::Vector3d> boundary_loop(const StokesField& field) {
  const int lo = kBorder, hi = field.n - 1 - kBorder;
  std::vector<std::pair<int, int>> nodes;
  for (int i = lo; i < hi; ++i) nodes.emplace_back(i, lo);
  for (int j = lo; j < hi; ++j) nodes.emplace_back(hi, j);
  for (int i = hi; i > lo; --i) nodes.emplace_back(i, hi);
  for (int j = hi; j > lo; --j) nodes.emplace_back(lo, j);
  std::vector<Eigen::Vector3d> loop;
  loop.reserve(nodes.size());
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    const Eigen::Index k = field.index(it->first, it->second);
    if (field.mask[static_cast<std::size_t>(k)]) continue;
    loop.emplace_back(field.vectors.row(k).transpose());
  }
  return loop;
}

}  // namespace

SkyrmionIntegral skyrmion_integral(const StokesField& field) {
  require_populated(field);
  SkyrmionIntegral out;
  out.interior = interior_integral(field, field.vectors);

  const std::vector<Eigen::Vector3d> loop = boundary_loop(field);
  if (loop.size() >= 3) {
    Eigen::Vector3d pole = Eigen::Vector3d::Zero();
    for (const auto& v : loop) pole += v;
    if (pole.norm() > 0.0) {
      pole.normalize();
      double lowest = 1.0;
      for (const auto& v : loop) lowest = std::min(lowest, pole.dot(v));
      if (lowest > 0.0) {
        double omega = 0.0;
        for (std::size_t k = 0; k < loop.size(); ++k)
          omega += triangle_solid_angle(pole, loop[k], loop[(k + 1) % loop.size()]);
        out.closure = omega / (4.0 * std::numbers::pi);
        out.closed = true;
      }
    }
  }
  out.total = out.interior + out.closure;
  return out;
}

double raw_skyrmion_number(const StokesField& field) {
  require_populated(field);
  return interior_integral(field, field.raw);
}

StokesPhases stokes_phases(const StokesField& field) {
  StokesPhases out;
  out.xy.setZero(field.n, field.n);
  out.yz.setZero(field.n, field.n);
  out.zx.setZero(field.n, field.n);
  for (int j = 0; j < field.n; ++j)
    for (int i = 0; i < field.n; ++i) {
      const Eigen::Index k = field.index(i, j);
      if (field.mask[static_cast<std::size_t>(k)]) continue;
      const auto s = field.vectors.row(k);
      out.xy(j, i) = std::atan2(s(1), s(0));
      out.yz(j, i) = std::atan2(s(2), s(1));
      out.zx(j, i) = std::atan2(s(0), s(2));
    }
  return out;
}

TopologyPrediction predict_topology(int ell1, int ell2) {
  const int d = std::abs(ell1) - std::abs(ell2);
  TopologyPrediction p;
  p.polarity = (d > 0) - (d < 0);
  p.vorticity = ell1 - ell2;
  p.skyrmion_number = p.polarity * p.vorticity;
  return p;
}

DensityMatrix basis_rotation(const DensityMatrix& rho, const Matrix2c& u_pol) {
  if (!is_unitary(u_pol)) throw Error(Errc::NotUnitary, "polarisation rotation is not unitary");
  const Matrix4c u = tensor_product(u_pol, Matrix2c::Identity());
  return u * rho * u.adjoint();
}

TopologyReport analyze_topology(const StokesField& field) {
  const SkyrmionIntegral integral = skyrmion_integral(field);
  TopologyReport r;
  r.skyrmion_number = integral.total;
  r.interior = integral.interior;
  r.closure = integral.closure;
  r.closed = integral.closed;
  r.raw_skyrmion_number = raw_skyrmion_number(field);
  r.predicted = predict_topology(field.ell1, field.ell2);
  r.n = field.n;
  r.extent = field.extent;
  r.masked = field.masked_count();
  return r;
}

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_grid_header(std::ostream& os, const StokesField& field, const std::string& columns) {
  os << "# n " << field.n << '\n'
     << "# extent " << g17(field.extent) << '\n'
     << "# waist " << g17(field.waist) << '\n'
     << "# subspace " << field.ell1 << ' ' << field.ell2 << '\n'
     << "# x y " << columns << " mask\n";
}

}  // namespace

void write_stokes_field(std::ostream& os, const StokesField& field) {
  write_grid_header(os, field, "Sx Sy Sz");
  for (int j = 0; j < field.n; ++j)
    for (int i = 0; i < field.n; ++i) {
      const Eigen::Index k = field.index(i, j);
      os << g17(field.coordinate(i)) << ' ' << g17(field.coordinate(j)) << ' ' << g17(field.vectors(k, 0)) << ' '
         << g17(field.vectors(k, 1)) << ' ' << g17(field.vectors(k, 2)) << ' '
         << int(field.mask[static_cast<std::size_t>(k)]) << '\n';
    }
}

void write_phase_grid(std::ostream& os, const StokesField& field, const Eigen::MatrixXd& phase, const char* name) {
  write_grid_header(os, field, name);
  for (int j = 0; j < field.n; ++j)
    for (int i = 0; i < field.n; ++i)
      os << g17(field.coordinate(i)) << ' ' << g17(field.coordinate(j)) << ' ' << g17(phase(j, i)) << ' '
         << int(field.mask[static_cast<std::size_t>(field.index(i, j))]) << '\n';
}

StokesField read_stokes_field(std::istream& is) {
  StokesField field;
  bool have_n = false, have_extent = false;
  std::string line;
  std::size_t row = 0;
  auto bad = [&](const std::string& what) { return Error(Errc::BadFormat, what); };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "n") {
        if (!(hs >> field.n) || field.n < 7) throw bad("bad grid size");
        have_n = true;
        const auto points = static_cast<Eigen::Index>(field.n) * field.n;
        field.vectors.setZero(points, 3);
        field.mask.assign(static_cast<std::size_t>(points), 0);
      } else if (key == "extent") {
        if (!(hs >> field.extent) || !(field.extent > 0.0)) throw bad("bad extent");
        have_extent = true;
      } else if (key == "waist") {
        if (!(hs >> field.waist)) throw bad("bad waist");
      } else if (key == "subspace") {
        if (!(hs >> field.ell1 >> field.ell2)) throw bad("bad subspace");
      }
      continue;
    }
    if (!have_n || !have_extent) throw bad("data row before the n / extent header");
    if (row >= field.mask.size()) throw bad("more rows than n*n");
    std::istringstream rs(line);
    double x, y, sx, sy, sz;
    int m;
    if (!(rs >> x >> y >> sx >> sy >> sz >> m)) throw bad("malformed row " + std::to_string(row + 1));
    const Eigen::Index k = static_cast<Eigen::Index>(row);
    field.vectors.row(k) << sx, sy, sz;
    field.mask[row] = m != 0;
    ++row;
  }
  if (!have_n || row != field.mask.size())
    throw bad("expected " + std::to_string(field.mask.size()) + " rows, read " + std::to_string(row));
  field.raw = field.vectors;
  return field;
}

void write_topology_report(std::ostream& os, const TopologyReport& r) {
  os << "skyrmion_number " << g17(r.skyrmion_number) << '\n'
     << "interior " << g17(r.interior) << '\n'
     << "closure " << g17(r.closure) << '\n'
     << "closed " << (r.closed ? 1 : 0) << '\n'
     << "raw_skyrmion_number " << g17(r.raw_skyrmion_number) << '\n'
     << "predicted_N " << r.predicted.skyrmion_number << '\n'
     << "polarity " << r.predicted.polarity << '\n'
     << "vorticity " << r.predicted.vorticity << '\n'
     << "grid_n " << r.n << '\n'
     << "extent " << g17(r.extent) << '\n'
     << "masked " << r.masked << '\n';
}

}  // namespace qsky
