#pragma once

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hospigrid/grid.hpp"

namespace hospigrid::console {

inline std::string error_code(Errc c) {
  switch (c) {
    case Errc::NotAuthorized: return "E_RIGHTS";
    case Errc::UnknownLfn: return "E_NOLFN";
    case Errc::DuplicateLfn: return "E_DUPLFN";
    case Errc::DuplicateImageId: return "E_DUPIMG";
    case Errc::SiteUnavailable: return "E_DOWN";
    case Errc::UnknownUser: return "E_NOUSER";
    case Errc::RevokedCertificate: return "E_CERT";
    case Errc::BadCommand: return "E_SYNTAX";
    default: {
      std::string out = "E_";
      for (const char* p = errc_name(c); *p; ++p)
        out.push_back(char(std::toupper(*p)));
      return out;
    }
  }
}

// Parses "col<op>literal" atoms, e.g. modality=MG, study_date>=2004-01-01,
// image_id~img (CONTAINS).
inline std::unique_ptr<query::Pred> parse_atom_token(const std::string& tok) {
  static const std::pair<const char*, query::CmpOp> ops[] = {
      {"<=", query::CmpOp::Le}, {">=", query::CmpOp::Ge}, {"!=", query::CmpOp::Ne},
      {"=", query::CmpOp::Eq},  {"<", query::CmpOp::Lt},  {">", query::CmpOp::Gt},
      {"~", query::CmpOp::Contains}};
  for (const auto& [sym, op] : ops) {
    std::size_t pos = tok.find(sym);
    if (pos != std::string::npos && pos > 0)
      return query::Pred::atom(tok.substr(0, pos), op, tok.substr(pos + std::strlen(sym)));
  }
  fail(Errc::BadCommand, "bad predicate atom: " + tok);
}

struct ScriptResult {
  int exit_code = 0;
  std::string transcript;
};

// The clinician-facing console: one command per line, tab-separated tables
// out. Every command maps onto exactly one grid operation.
class Console {
 public:
  Console(Grid& grid, std::string site) : grid_(grid), site_(std::move(site)) {
    if (!grid_.topology().has_site(site_)) fail(Errc::UnknownSite, site_);
  }

  const std::string& site() const { return site_; }
  bool quit_requested() const { return quit_; }

  // Grammar check only; used to validate scripts before execution begins.
  static void validate_command(const std::string& line, bool script_mode) {
    auto f = split_ws(line);
    if (f.empty()) return;  // blank lines and comments are no-ops
    if (f[0][0] == '#') return;
    const std::string& cmd = f[0];
    auto need = [&](std::size_t n) {
      if (f.size() < n) fail(Errc::BadCommand, "usage error: " + line);
    };
    if (cmd == "login" || cmd == "cat" || cmd == "site") need(2);
    else if (cmd == "import" || cmd == "get") need(2);
    else if (cmd == "mirror") need(3);
    else if (cmd == "query") {
      need(3);
      if (f[1] != "local" && f[1] != "global")
        fail(Errc::BadCommand, "query scope must be local|global");
    } else if (cmd == "submit") {
      need(3);
      if (f[1] != "SMF" && f[1] != "CADe")
        fail(Errc::BadCommand, "job kind must be SMF|CADe");
    } else if (cmd == "expect") {
      need(2);
      if (!script_mode) fail(Errc::BadCommand, "expect is script-only");
    } else if (cmd == "jobs" || cmd == "audit" || cmd == "topology" || cmd == "quit") {
      // no arguments
    } else {
      fail(Errc::BadCommand, "unknown command: " + cmd);
    }
  }

  // Executes one command; errors come back as "error <code> <detail>" lines
  // and the session continues.
  std::string exec(const std::string& line) {
    try {
      validate_command(line, false);
      return dispatch(line);
    } catch (const GridError& e) {
      return "error " + error_code(e.code()) + " " + e.detail() + "\n";
    }
  }

  ScriptResult run_script(const std::vector<std::string>& lines) {
    // whole script must parse before anything runs
    for (const auto& line : lines) validate_command(line, true);

    ScriptResult res;
    std::string last_output;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const std::string& line = lines[i];
      auto f = split_ws(line);
      if (f.empty() || f[0][0] == '#') continue;
      if (f[0] == "expect") {
        std::string want = line.substr(line.find("expect") + 7);
        if (last_output.find(want) == std::string::npos) {
          res.transcript += "assertion failed at line " + std::to_string(i + 1) +
                            ": expected \"" + want + "\"\n";
          res.exit_code = 1;
          return res;
        }
        continue;
      }
      res.transcript += "> " + line + "\n";
      last_output = exec(line);
      res.transcript += last_output;
      if (starts_with(last_output, "error ") && f[0] != "quit") {
        // errors are part of the transcript, not fatal; assertions decide
      }
      if (quit_) break;
    }
    return res;
  }

 private:
  std::string dispatch(const std::string& line) {
    auto f = split_ws(line);
    if (f.empty() || f[0][0] == '#') return "";
    const std::string& cmd = f[0];

    if (cmd == "quit") {
      quit_ = true;
      return "bye\n";
    }
    if (cmd == "site") {
      if (!grid_.topology().has_site(f[1])) fail(Errc::UnknownSite, f[1]);
      site_ = f[1];
      session_.reset();
      return "console at " + site_ + "\n";
    }
    if (cmd == "login") {
      federation::Rights all{Right::read, Right::query_local, Right::query_global,
                             Right::replicate, Right::execute, Right::admin};
      session_ = grid_.open_session(site_, f[1], all);
      std::vector<std::string> names;
      for (auto r : session_->rights) names.push_back(federation::right_name(r));
      return "session opened user=" + f[1] + " site=" + site_ +
             " rights=" + join(names, ",") + "\n";
    }
    if (cmd == "topology") {
      const auto& t = grid_.topology();
      std::string out = std::string("mode\t") + federation::mode_name(t.mode) + "\n";
      for (const auto& s : t.sites) {
        out += "site\t" + s.name + "\t" + s.address;
        if (t.central && *t.central == s.name) out += "\tcentral";
        if (grid_.is_down(s.name)) out += "\tdown";
        out += "\n";
      }
      for (const auto& vo : t.vos) {
        out += "vo\t" + vo.id;
        if (vo.parent) out += "\tparent=" + *vo.parent;
        for (const auto& m : vo.members) out += "\t" + m;
        out += "\n";
      }
      return out;
    }
    if (cmd == "audit") return grid_.audit().report();

    const Session& session = require_session();

    if (cmd == "import") {
      std::ifstream in(f[1], std::ios::binary);
      if (!in) fail(Errc::BadCommand, "cannot read " + f[1]);
      Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      auto r = grid_.import_file(session, bytes, f.size() > 2 ? f[2] : "");
      return "imported " + r.lfn + " guid=" + r.guid + "\n";
    }
    if (cmd == "query") return run_query_command(f, session);
    if (cmd == "mirror") {
      auto receipt = grid_.mirror(session, f[1], f[2]);
      return "mirrored " + f[1] + " to " + f[2] + " bytes=" +
             std::to_string(receipt.bytes) + " duration=" + fmt(receipt.duration()) + "\n";
    }
    if (cmd == "get") {
      auto [bytes, receipt] = grid_.get(session, f[1], site_);
      if (f.size() > 2) {
        std::ofstream out(f[2], std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  std::streamsize(bytes.size()));
      }
      return "got " + f[1] + " bytes=" + std::to_string(receipt.bytes) + " from=" +
             receipt.from + " mode=" + gridio::mode_name(receipt.mode) + "\n";
    }
    if (cmd == "cat") return grid_.cat(session, f[1], site_);
    if (cmd == "submit") {
      jobs::JobSpec spec;
      spec.job_id = "J" + std::to_string(++job_seq_);
      spec.kind = jobs::parse_kind(f[1]);
      for (std::size_t i = 2; i < f.size(); ++i) spec.input_lfns.push_back(f[i]);
      spec.submitted_by = session;
      spec.origin = site_;
      auto placement = grid_.submit(spec, jobs::PlacementPolicy::data_local());
      auto result = grid_.run_job(placement, spec);
      std::string out = "job " + spec.job_id + " kind=" + f[1] + " site=" +
                        placement.chosen_site + " wan_bytes=" +
                        std::to_string(placement.wan_bytes_incurred);
      if (result.status == jobs::JobStatus::Done)
        out += " status=Done output=" + result.output_lfn +
               " digest=" + result.digest.substr(0, 16);
      else
        out += " status=Failed reason=" + result.failure_reason;
      return out + "\n";
    }
    if (cmd == "jobs") {
      std::string out = "job_id\tstatus\toutput\n";
      for (const auto& r : grid_.job_results())
        out += r.job_id + "\t" +
               (r.status == jobs::JobStatus::Done ? "Done" : "Failed") + "\t" +
               r.output_lfn + "\n";
      return out;
    }
    fail(Errc::BadCommand, cmd);
  }

  std::string run_query_command(const std::vector<std::string>& f, const Session& session) {
    query::QueryDoc doc;
    doc.scope = f[1] == "global" ? query::Scope::Global : query::Scope::Local;
    doc.from = f[2];
    doc.select = catalog::default_schema().columns(doc.from);

    std::unique_ptr<query::Pred> pred;
    std::size_t i = 3;
    while (i < f.size() && f[i] != "join") {
      if (f[i] == "and") { ++i; continue; }
      auto atom = parse_atom_token(f[i]);
      pred = pred ? query::Pred::combine(query::Pred::Kind::And, std::move(pred),
                                         std::move(atom))
                  : std::move(atom);
      ++i;
    }
    while (i < f.size()) {
      if (f[i] != "join" || i + 3 >= f.size()) fail(Errc::BadCommand, "bad join clause");
      doc.joins.push_back({f[i + 1], f[i + 2], f[i + 3]});
      i += 4;
    }
    doc.predicate = std::move(pred);

    auto outcome = grid_.run_query(session, doc);
    std::string out = join(outcome.doc.columns, "\t") + "\n";
    for (const auto& row : outcome.doc.rows) out += join(row, "\t") + "\n";
    out += "rows " + std::to_string(outcome.doc.rows.size()) + " dedup " +
           std::to_string(outcome.doc.dedup_count) + " sites " +
           std::to_string(outcome.doc.contributing_sites.size()) + "\n";
    for (const auto& s : outcome.unavailable_sites) out += "unavailable " + s + "\n";
    return out;
  }

  const Session& require_session() {
    if (!session_) fail(Errc::NotAuthorized, "no session; use: login <user>");
    return *session_;
  }

  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  }

  Grid& grid_;
  std::string site_;
  std::optional<Session> session_;
  std::uint64_t job_seq_ = 0;
  bool quit_ = false;
};

}  // namespace hospigrid::console
