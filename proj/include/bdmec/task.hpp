#pragma once

namespace bdmec {

// One UE's sensing task: payload size and its processing demand.
struct UserTask {
  double s_bits = 0.0;       // payload size
  double c_per_bit = 0.0;    // cycles per bit
  double c_total = 0.0;      // total cycles, always s_bits * c_per_bit

  static UserTask make(double s_bits, double c_per_bit) {
    return UserTask{s_bits, c_per_bit, s_bits * c_per_bit};
  }
};

}  // namespace bdmec
