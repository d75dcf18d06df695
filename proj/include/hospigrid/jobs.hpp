#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "hospigrid/common.hpp"
#include "hospigrid/federation.hpp"
#include "hospigrid/model.hpp"

namespace hospigrid::jobs {

enum class JobKind { SMF, CADe };

inline const char* kind_name(JobKind k) { return k == JobKind::SMF ? "SMF" : "CADe"; }

inline JobKind parse_kind(const std::string& s) {
  if (s == "SMF") return JobKind::SMF;
  if (s == "CADe") return JobKind::CADe;
  fail(Errc::BadCommand, "job kind " + s);
}

struct JobSpec {
  std::string job_id;
  JobKind kind = JobKind::SMF;
  std::vector<std::string> input_lfns;  // non-empty, registered at submission
  federation::Session submitted_by;
  std::string origin;
};

struct PlacementPolicy {
  enum class Kind { Random, DataLocal };
  Kind kind = Kind::DataLocal;
  std::uint64_t seed = 0;

  static PlacementPolicy random(std::uint64_t seed) { return {Kind::Random, seed}; }
  static PlacementPolicy data_local() { return {Kind::DataLocal, 0}; }

  std::string name() const {
    if (kind == Kind::Random) return "Random(" + std::to_string(seed) + ")";
    return "DataLocal";
  }
};

struct Placement {
  std::string job_id;
  std::string chosen_site;
  PlacementPolicy policy;
  std::uint64_t wan_bytes_incurred = 0;  // input bytes lacking a local replica
};

// Random placement generator, pinned exactly: a SplitMix-style 64-bit mix
// of (seed, job ordinal); site index = mix mod live-site count over the
// name-sorted live site list.
inline std::size_t random_site_index(std::uint64_t seed, std::uint64_t job_ordinal,
                                     std::size_t live_count) {
  if (live_count == 0) fail(Errc::NoLiveSites);
  return std::size_t(mix64(seed, job_ordinal) % live_count);
}

// DataLocal: the site already holding the most input bytes, ties broken by
// site-name byte order (the sorted scan keeps the first maximum).
inline std::string data_local_site(const std::map<std::string, std::uint64_t>& local_bytes) {
  if (local_bytes.empty()) fail(Errc::NoLiveSites);
  std::string best;
  std::uint64_t best_bytes = 0;
  bool first = true;
  for (const auto& [site, bytes] : local_bytes) {
    if (first || bytes > best_bytes) {
      best = site;
      best_bytes = bytes;
      first = false;
    }
  }
  return best;
}

// ---- deterministic executor stubs -------------------------------------------
// The real SMF/CADe algorithms are third-party; these stand-ins are pure
// functions of the input bytes so results are placement-independent.

// Byte-wise involution on the pixel data; applying it twice restores the input.
inline model::DicomLiteFile smf_stub(const model::DicomLiteFile& input) {
  model::DicomLiteFile out = input;
  out.set_tag("SMF", "done");
  for (auto& b : out.pixel_data) b = std::uint8_t(~b);
  return out;
}

// Pseudo-findings report; finding count = pixel length mod 4, coordinates
// derived from a hash of the image id.
inline std::string cade_stub(const model::DicomLiteFile& input) {
  std::string image_id = input.required_tag("ImageID");
  std::size_t findings = input.pixel_data.size() % 4;
  std::string out = "CADE-REPORT image=" + image_id + "\n";
  out += "findings=" + std::to_string(findings) + "\n";
  auto d = sha256(image_id);
  std::uint64_t h = 0;
  for (int i = 0; i < 8; ++i) h = h << 8 | d[i];
  for (std::size_t i = 0; i < findings; ++i) {
    std::uint64_t m = mix64(h, i);
    out += "finding " + std::to_string(i) + " x=" + std::to_string(m % 4096) +
           " y=" + std::to_string((m >> 12) % 4096) + "\n";
  }
  return out;
}

enum class JobStatus { Done, Failed };

struct JobResult {
  std::string job_id;
  JobStatus status = JobStatus::Done;
  std::string failure_reason;
  std::string output_lfn;
  std::string digest;  // 256-bit hash of the output bytes
};

// "policy\ttotal_wan_bytes\tjob_count" per policy, sorted by policy name.
inline std::string workload_report(const std::vector<Placement>& placements) {
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> totals;
  for (const auto& p : placements) {
    auto& [bytes, count] = totals[p.policy.name()];
    bytes += p.wan_bytes_incurred;
    count += 1;
  }
  std::string out = "policy\ttotal_wan_bytes\tjob_count\n";
  for (const auto& [policy, t] : totals)
    out += policy + "\t" + std::to_string(t.first) + "\t" + std::to_string(t.second) + "\n";
  return out;
}

// "JOB <id> <SMF|CADe> <lfn> [<lfn>...]"
inline JobSpec parse_job_line(const std::string& line) {
  auto f = split_ws(line);
  if (f.size() < 4 || f[0] != "JOB") fail(Errc::BadCommand, line);
  JobSpec spec;
  spec.job_id = f[1];
  spec.kind = parse_kind(f[2]);
  for (std::size_t i = 3; i < f.size(); ++i) spec.input_lfns.push_back(f[i]);
  return spec;
}

}  // namespace hospigrid::jobs
