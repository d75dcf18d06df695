#pragma once

#include <string>
#include <vector>

#include "hospigrid/common.hpp"

namespace hospigrid::gridio {

// Binary units throughout: 1 MB = 1,048,576 bytes.
inline constexpr std::uint64_t kMiB = 1024 * 1024;

enum class TransferMode { grid, direct };

inline const char* mode_name(TransferMode m) {
  return m == TransferMode::grid ? "grid" : "direct";
}

// Directed link; the reverse direction must be declared separately.
struct LinkSpec {
  std::string from;
  std::string to;
  double bandwidth_bps = 0;   // bytes per simulated second
  double latency_s = 0;       // simulated seconds
  double grid_overhead_s = 0; // per grid-mediated operation

  void validate() const {
    if (bandwidth_bps <= 0) fail(Errc::MalformedConfig, "link bandwidth must be > 0");
    if (latency_s < 0 || grid_overhead_s < 0)
      fail(Errc::MalformedConfig, "negative link timing");
  }
};

inline double transfer_time(std::uint64_t bytes, const LinkSpec& link, TransferMode mode) {
  double t = link.latency_s + double(bytes) / link.bandwidth_bps;
  if (mode == TransferMode::grid) t += link.grid_overhead_s;
  return t;
}

// "LINK <from> <to> <bandwidth_Bps> <latency_s> <grid_overhead_s>"
inline LinkSpec parse_link_line(const std::string& line) {
  auto f = split_ws(line);
  if (f.size() != 6 || f[0] != "LINK") fail(Errc::MalformedConfig, line);
  LinkSpec l{f[1], f[2], std::stod(f[3]), std::stod(f[4]), std::stod(f[5])};
  l.validate();
  return l;
}

struct TransferReceipt {
  std::string lfn;
  std::string from;
  std::string to;
  std::uint64_t bytes = 0;
  double started = 0;
  double finished = 0;
  TransferMode mode = TransferMode::direct;

  double duration() const { return finished - started; }

  std::string to_line() const {
    return lfn + "\t" + from + "\t" + to + "\t" + std::to_string(bytes) + "\t" +
           std::to_string(started) + "\t" + std::to_string(finished) + "\t" +
           mode_name(mode);
  }
};

// Per-scenario virtual clock. Wall-clock time never enters assertions.
class SimClock {
 public:
  double now() const { return now_; }
  double advance(double seconds) {
    if (seconds > 0) now_ += seconds;
    return now_;
  }

 private:
  double now_ = 0;
};

}  // namespace hospigrid::gridio
