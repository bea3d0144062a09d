#include "bdmec/phase_shift.hpp"

#include <stdexcept>

namespace bdmec {

std::string to_string(IrsArch arch) {
  switch (arch) {
    case IrsArch::SingleConnected: return "sc";
    case IrsArch::GroupConnected: return "gc";
    case IrsArch::FullyConnected: return "fc";
  }
  return "?";
}

PhaseShift PhaseShift::identity(IrsArch arch, std::size_t k, std::size_t l) {
  if (l == 0 || k % l != 0) throw std::invalid_argument("PhaseShift: K mod L != 0");
  if (arch == IrsArch::SingleConnected && l != k) {
    throw std::invalid_argument("PhaseShift: single-connected requires L == K");
  }
  if (arch == IrsArch::FullyConnected && l != 1) {
    throw std::invalid_argument("PhaseShift: fully-connected requires L == 1");
  }
  PhaseShift phi;
  phi.arch = arch;
  const std::size_t kbar = k / l;
  phi.blocks.assign(l, CMatrix::Identity(static_cast<Eigen::Index>(kbar),
                                         static_cast<Eigen::Index>(kbar)));
  return phi;
}

PhaseShift PhaseShift::single_connected(const std::vector<double>& thetas) {
  PhaseShift phi;
  phi.arch = IrsArch::SingleConnected;
  phi.blocks.reserve(thetas.size());
  for (const double t : thetas) {
    CMatrix b(1, 1);
    b(0, 0) = std::polar(1.0, t);
    phi.blocks.push_back(b);
  }
  return phi;
}

double PhaseShift::unitarity_defect() const {
  double worst = 0.0;
  for (const auto& u : blocks) {
    const CMatrix defect = u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols());
    worst = std::max(worst, defect.norm());
  }
  return worst;
}

std::size_t groups_for_arch(IrsArch arch, const SystemConfig& cfg) {
  switch (arch) {
    case IrsArch::SingleConnected: return cfg.n_elements;
    case IrsArch::FullyConnected: return 1;
    case IrsArch::GroupConnected: return cfg.n_groups;
  }
  return cfg.n_groups;
}

CMatrix assemble(const PhaseShift& phi) {
  const std::size_t l = phi.n_groups();
  const std::size_t kbar = phi.block_dim();
  const auto k = static_cast<Eigen::Index>(l * kbar);
  CMatrix full = CMatrix::Zero(k, k);
  for (std::size_t g = 0; g < l; ++g) {
    const auto off = static_cast<Eigen::Index>(g * kbar);
    full.block(off, off, static_cast<Eigen::Index>(kbar), static_cast<Eigen::Index>(kbar)) =
        phi.blocks[g];
  }
  return full;
}

void check_feasible(const PhaseShift& phi, double tol) {
  if (phi.blocks.empty()) throw std::invalid_argument("PhaseShift: no blocks");
  const auto dim = phi.blocks[0].rows();
  for (const auto& u : phi.blocks) {
    if (u.rows() != u.cols() || u.rows() != dim) {
      throw std::invalid_argument("PhaseShift: blocks must be square and equally sized");
    }
  }
  if (phi.arch == IrsArch::SingleConnected && dim != 1) {
    throw std::invalid_argument("PhaseShift: single-connected blocks must be 1x1");
  }
  if (phi.arch == IrsArch::FullyConnected && phi.blocks.size() != 1) {
    throw std::invalid_argument("PhaseShift: fully-connected needs a single block");
  }
  if (phi.unitarity_defect() > tol) {
    throw std::invalid_argument("PhaseShift: block violates the unitary constraint");
  }
}

}  // namespace bdmec
