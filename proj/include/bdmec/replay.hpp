#pragma once

#include <iosfwd>
#include <string>

#include "bdmec/channel.hpp"
#include "bdmec/phase_shift.hpp"

namespace bdmec {

// Binary interchange format for one channel realization plus the reflection
// state, for replay and cross-implementation comparison. Layout, all
// little-endian:
//   magic   u32  'B','D','C','H'
//   version u32  1
//   n, m, k, l   u64 each (l = 0 when no reflection state is stored)
//   arch    u32  (0 sc, 1 gc, 2 fc; unused when l = 0)
//   los_direct   n bytes, los_ue_irs n bytes, los_irs_ap 1 byte
//   h_direct     n * m complex (re, im as f64), user-major
//   g_irs_ap     m x k complex, row-major
//   h_ue_irs     n * k complex, user-major
//   blocks       l * kbar * kbar complex, block then row-major
struct ReplayRecord {
  ChannelSet channels;
  bool has_phase = false;
  PhaseShift phase;
};

void write_replay(std::ostream& out, const ReplayRecord& rec);
ReplayRecord read_replay(std::istream& in);

void write_replay_file(const std::string& path, const ReplayRecord& rec);
ReplayRecord read_replay_file(const std::string& path);

}  // namespace bdmec
