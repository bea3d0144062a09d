#include "bdmec/replay.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace bdmec {
namespace {

constexpr std::uint32_t kMagic = 0x48434442;  // "BDCH"
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("replay: truncated stream");
  return v;
}

void put_complex(std::ostream& out, const Complex& c) {
  put<double>(out, c.real());
  put<double>(out, c.imag());
}

Complex get_complex(std::istream& in) {
  const double re = get<double>(in);
  const double im = get<double>(in);
  return {re, im};
}

void put_matrix(std::ostream& out, const CMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_complex(out, m(r, c));
  }
}

CMatrix get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get_complex(in);
  }
  return m;
}

}  // namespace

void write_replay(std::ostream& out, const ReplayRecord& rec) {
  const auto& ch = rec.channels;
  const std::uint64_t n = ch.n_users();
  const std::uint64_t m = ch.n_antennas();
  const std::uint64_t k = ch.n_elements();
  const std::uint64_t l = rec.has_phase ? rec.phase.n_groups() : 0;

  put(out, kMagic);
  put(out, kVersion);
  put(out, n);
  put(out, m);
  put(out, k);
  put(out, l);
  put<std::uint32_t>(out, rec.has_phase ? static_cast<std::uint32_t>(rec.phase.arch) : 0);
  for (std::uint64_t i = 0; i < n; ++i) put<std::uint8_t>(out, ch.los_direct[i]);
  for (std::uint64_t i = 0; i < n; ++i) put<std::uint8_t>(out, ch.los_ue_irs[i]);
  put<std::uint8_t>(out, ch.los_irs_ap);
  for (std::uint64_t i = 0; i < n; ++i) {
    for (Eigen::Index a = 0; a < ch.h_direct[i].size(); ++a) put_complex(out, ch.h_direct[i][a]);
  }
  put_matrix(out, ch.g_irs_ap);
  for (std::uint64_t i = 0; i < n; ++i) {
    for (Eigen::Index a = 0; a < ch.h_ue_irs[i].size(); ++a) put_complex(out, ch.h_ue_irs[i][a]);
  }
  if (rec.has_phase) {
    for (const auto& b : rec.phase.blocks) put_matrix(out, b);
  }
  if (!out) throw std::runtime_error("replay: write failure");
}

ReplayRecord read_replay(std::istream& in) {
  if (get<std::uint32_t>(in) != kMagic) throw std::runtime_error("replay: bad magic");
  if (get<std::uint32_t>(in) != kVersion) throw std::runtime_error("replay: unsupported version");
  const auto n = get<std::uint64_t>(in);
  const auto m = get<std::uint64_t>(in);
  const auto k = get<std::uint64_t>(in);
  const auto l = get<std::uint64_t>(in);
  const auto arch = get<std::uint32_t>(in);
  if (l != 0 && k % l != 0) throw std::runtime_error("replay: K mod L != 0");

  ReplayRecord rec;
  auto& ch = rec.channels;
  ch.los_direct.resize(n);
  ch.los_ue_irs.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) ch.los_direct[i] = get<std::uint8_t>(in);
  for (std::uint64_t i = 0; i < n; ++i) ch.los_ue_irs[i] = get<std::uint8_t>(in);
  ch.los_irs_ap = get<std::uint8_t>(in);
  ch.h_direct.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    ch.h_direct[i] = get_matrix(in, static_cast<Eigen::Index>(m), 1);
  }
  ch.g_irs_ap = get_matrix(in, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
  ch.h_ue_irs.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    ch.h_ue_irs[i] = get_matrix(in, static_cast<Eigen::Index>(k), 1);
  }
  if (l > 0) {
    rec.has_phase = true;
    rec.phase.arch = static_cast<IrsArch>(arch);
    const auto kbar = static_cast<Eigen::Index>(k / l);
    rec.phase.blocks.resize(l);
    for (std::uint64_t g = 0; g < l; ++g) rec.phase.blocks[g] = get_matrix(in, kbar, kbar);
  }
  return rec;
}

void write_replay_file(const std::string& path, const ReplayRecord& rec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("replay: cannot open '" + path + "' for writing");
  write_replay(out, rec);
}

ReplayRecord read_replay_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("replay: cannot open '" + path + "'");
  return read_replay(in);
}

}  // namespace bdmec
