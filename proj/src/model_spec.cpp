#include "realens/model_spec.hpp"

#include "realens/angles.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace realens {

namespace {

constexpr double kHermitianTolerance = 1e-12;
constexpr double kAntisymmetryTolerance = 1e-12;

std::string at(std::size_t a, std::size_t b) {
  std::ostringstream os;
  os << "(" << a + 1 << "," << b + 1 << ")";
  return os.str();
}

double canonical_offset(double angle) {
  double r = wrap_signed(angle);
  if (r <= -std::numbers::pi) r = std::numbers::pi;
  return r;
}

}  // namespace

ModelSpec ModelSpec::zeros(std::size_t dim, double hbar) {
  ModelSpec s;
  s.dim = dim;
  s.omega.assign(dim, 0.0);
  s.coupling = Eigen::MatrixXd::Zero(dim, dim);
  s.phase_offset = Eigen::MatrixXd::Zero(dim, dim);
  s.hbar = hbar;
  return s;
}

const ModelSpec& validate_spec(const ModelSpec& spec) {
  const std::size_t p = spec.dim;
  if (p < 1) throw SpecError("dimension must be at least 1");
  if (spec.omega.size() != p) throw SpecError("omega has wrong length");
  if (static_cast<std::size_t>(spec.coupling.rows()) != p ||
      static_cast<std::size_t>(spec.coupling.cols()) != p) {
    throw SpecError("coupling matrix has wrong shape");
  }
  if (static_cast<std::size_t>(spec.phase_offset.rows()) != p ||
      static_cast<std::size_t>(spec.phase_offset.cols()) != p) {
    throw SpecError("phase offset matrix has wrong shape");
  }
  if (!std::isfinite(spec.hbar) || spec.hbar <= 0.0) {
    throw SpecError("hbar must be positive and finite");
  }
  for (std::size_t a = 0; a < p; ++a) {
    if (!std::isfinite(spec.omega[a])) {
      throw SpecError("non-finite omega at (" + std::to_string(a + 1) + ")");
    }
  }
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      const double r = spec.coupling(a, b);
      const double d = spec.phase_offset(a, b);
      if (!std::isfinite(r)) throw SpecError("non-finite coupling at " + at(a, b));
      if (!std::isfinite(d)) throw SpecError("non-finite phase offset at " + at(a, b));
      if (r < 0.0) throw SpecError("negative coupling at " + at(a, b));
      if (a == b) {
        if (r != 0.0) throw SpecError("nonzero diagonal coupling at " + at(a, b));
        if (d != 0.0) throw SpecError("nonzero diagonal phase offset at " + at(a, b));
        continue;
      }
      if (r != spec.coupling(b, a)) {
        throw SpecError("asymmetric coupling at " + at(std::min(a, b), std::max(a, b)));
      }
      if (std::abs(wrap_signed(d + spec.phase_offset(b, a))) > kAntisymmetryTolerance) {
        throw SpecError("non-antisymmetric phase offset at " +
                        at(std::min(a, b), std::max(a, b)));
      }
    }
  }
  return spec;
}

Hamiltonian spec_to_hamiltonian(const ModelSpec& spec) {
  validate_spec(spec);
  const auto p = static_cast<Eigen::Index>(spec.dim);
  Hamiltonian h{Eigen::MatrixXcd::Zero(p, p)};
  for (Eigen::Index a = 0; a < p; ++a) {
    h.matrix(a, a) = spec.hbar * spec.omega[a];
    for (Eigen::Index b = a + 1; b < p; ++b) {
      const auto v = std::polar(spec.hbar * spec.coupling(a, b), spec.phase_offset(a, b));
      h.matrix(a, b) = v;
      h.matrix(b, a) = std::conj(v);
    }
  }
  return h;
}

void require_hermitian(const Hamiltonian& h) {
  const auto& m = h.matrix;
  if (m.rows() != m.cols() || m.rows() < 1) throw SpecError("Hamiltonian must be square");
  if (!m.allFinite()) throw SpecError("Hamiltonian has non-finite entries");
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index a = 0; a < m.rows(); ++a) {
    if (std::abs(m(a, a).imag()) > kHermitianTolerance * scale) {
      throw SpecError("complex diagonal at (" + std::to_string(a + 1) + ")");
    }
    for (Eigen::Index b = a + 1; b < m.cols(); ++b) {
      if (std::abs(m(a, b) - std::conj(m(b, a))) > kHermitianTolerance * scale) {
        throw SpecError("non-Hermitian Hamiltonian at " +
                        at(static_cast<std::size_t>(a), static_cast<std::size_t>(b)));
      }
    }
  }
}

ModelSpec hamiltonian_to_spec(const Hamiltonian& h, double hbar) {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw SpecError("hbar must be positive and finite");
  require_hermitian(h);
  const auto& m = h.matrix;
  const std::size_t p = h.dim();
  ModelSpec s = ModelSpec::zeros(p, hbar);
  for (std::size_t a = 0; a < p; ++a) {
    const auto i = static_cast<Eigen::Index>(a);
    s.omega[a] = m(i, i).real() / hbar;
    for (std::size_t b = a + 1; b < p; ++b) {
      const auto j = static_cast<Eigen::Index>(b);
      const double r = std::abs(m(i, j)) / hbar;
      s.coupling(i, j) = r;
      s.coupling(j, i) = r;
      if (r > 0.0) {
        const double d = canonical_offset(std::arg(m(i, j)));
        s.phase_offset(i, j) = d;
        s.phase_offset(j, i) = canonical_offset(-d);
      }
    }
  }
  return s;
}

ModelSpec time_reverse_spec(const ModelSpec& spec) {
  validate_spec(spec);
  ModelSpec out = spec;
  out.phase_offset = -spec.phase_offset;
  // keep the diagonal at +0.0 rather than −0.0
  for (std::size_t a = 0; a < spec.dim; ++a) {
    out.phase_offset(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = 0.0;
  }
  return out;
}

}  // namespace realens
