#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bdmec/channel.hpp"

namespace bdmec {

// IRS circuit topology. Single-connected keeps one phase per cell (diagonal
// reflection matrix), group-connected ties cells together in unitary blocks,
// fully-connected is one K x K unitary.
enum class IrsArch { SingleConnected, GroupConnected, FullyConnected };

std::string to_string(IrsArch arch);

// Block-unitary reflection state: L blocks of size Kbar = K / L.
//  SingleConnected => L = K, Kbar = 1
//  FullyConnected  => L = 1, Kbar = K
struct PhaseShift {
  IrsArch arch = IrsArch::SingleConnected;
  std::vector<CMatrix> blocks;

  std::size_t n_groups() const { return blocks.size(); }
  std::size_t block_dim() const { return blocks.empty() ? 0 : static_cast<std::size_t>(blocks[0].rows()); }
  std::size_t n_elements() const { return n_groups() * block_dim(); }

  static PhaseShift identity(IrsArch arch, std::size_t k, std::size_t l);
  static PhaseShift single_connected(const std::vector<double>& thetas);

  // Largest unitarity defect over blocks, ||U^H U - I||_F.
  double unitarity_defect() const;
};

// Resolves the block count for an architecture tag: SC => K, FC => 1,
// GC => cfg group count.
std::size_t groups_for_arch(IrsArch arch, const SystemConfig& cfg);

// Block-diagonal embedding into the full K x K matrix; off-block entries are
// exactly zero.
CMatrix assemble(const PhaseShift& phi);

// Throws if any block is non-square, mismatched in size, or not unitary to
// the stated tolerance.
void check_feasible(const PhaseShift& phi, double tol = 1e-8);

}  // namespace bdmec
