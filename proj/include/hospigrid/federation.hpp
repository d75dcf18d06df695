#pragma once

#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hospigrid/common.hpp"
#include "hospigrid/gridio.hpp"
#include "hospigrid/model.hpp"

namespace hospigrid::federation {

enum class Mode { P1, P1_5, P2 };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::P1: return "P1";
    case Mode::P1_5: return "P1_5";
    case Mode::P2: return "P2";
  }
  return "?";
}

struct Vo {
  std::string id;
  std::optional<std::string> parent;
  std::vector<std::string> members;
};

struct Topology {
  Mode mode = Mode::P1_5;
  std::vector<model::SiteId> sites;
  std::optional<std::string> central;  // required iff P1
  std::vector<Vo> vos;                 // P2 only
  // target site -> caller sites admitted by its allowlist; a site absent
  // from this map admits every caller (no ALLOW line declared for it).
  std::map<std::string, std::set<std::string>> allow;
  std::map<std::pair<std::string, std::string>, gridio::LinkSpec> links;

  bool has_site(const std::string& name) const {
    for (const auto& s : sites)
      if (s.name == name) return true;
    return false;
  }

  const model::SiteId& site(const std::string& name) const {
    for (const auto& s : sites)
      if (s.name == name) return s;
    fail(Errc::UnknownSite, name);
  }

  const gridio::LinkSpec& link(const std::string& from, const std::string& to) const {
    auto it = links.find({from, to});
    if (it == links.end())
      fail(Errc::SiteUnavailable, "no link " + from + " -> " + to);
    return it->second;
  }

  bool allows(const std::string& target, const std::string& caller) const {
    if (caller == target) return true;  // a site always admits itself
    auto it = allow.find(target);
    if (it == allow.end()) return true;
    return it->second.count(caller) > 0;
  }

  std::optional<std::string> vo_of(const std::string& site) const {
    for (const auto& vo : vos)
      for (const auto& m : vo.members)
        if (m == site) return vo.id;
    return std::nullopt;
  }

  // P2 scope: the caller's own VO plus every VO reachable via parent links
  // (hierarchical read-up). In P1/P1_5 the scope is every site.
  std::set<std::string> vo_scope(const std::string& caller) const {
    std::set<std::string> out;
    if (mode != Mode::P2) {
      for (const auto& s : sites) out.insert(s.name);
      return out;
    }
    auto vo_id = vo_of(caller);
    if (!vo_id) return out;
    std::set<std::string> in_scope_vos;
    std::string cur = *vo_id;
    while (true) {
      if (!in_scope_vos.insert(cur).second) break;  // defensive; parents are acyclic
      const Vo* vo = nullptr;
      for (const auto& v : vos)
        if (v.id == cur) vo = &v;
      if (!vo || !vo->parent) break;
      cur = *vo->parent;
    }
    for (const auto& v : vos)
      if (in_scope_vos.count(v.id))
        for (const auto& m : v.members) out.insert(m);
    return out;
  }

  void validate() const {
    if (sites.empty()) fail(Errc::MalformedConfig, "no sites");
    std::set<std::string> names;
    for (const auto& s : sites)
      if (!names.insert(s.name).second)
        fail(Errc::MalformedConfig, "duplicate site " + s.name);
    if (mode == Mode::P1) {
      if (!central) fail(Errc::MissingCentral, "P1 topology requires CENTRAL");
      if (!has_site(*central)) fail(Errc::MissingCentral, *central);
    }
    if (mode == Mode::P2) {
      for (const auto& s : sites) {
        int n = 0;
        for (const auto& vo : vos)
          for (const auto& m : vo.members)
            if (m == s.name) ++n;
        if (n != 1)
          fail(Errc::MalformedConfig,
               "site " + s.name + " must belong to exactly one VO");
      }
      // parent links must be acyclic and resolvable
      for (const auto& vo : vos) {
        std::set<std::string> seen;
        std::string cur = vo.id;
        while (true) {
          if (!seen.insert(cur).second) fail(Errc::CyclicVoHierarchy, vo.id);
          const Vo* v = nullptr;
          for (const auto& w : vos)
            if (w.id == cur) v = &w;
          if (!v) fail(Errc::MalformedConfig, "unknown VO " + cur);
          if (!v->parent) break;
          cur = *v->parent;
        }
      }
    }
    for (const auto& [key, l] : links) {
      if (!has_site(key.first) || !has_site(key.second))
        fail(Errc::MalformedConfig, "link references unknown site");
      l.validate();
    }
  }
};

inline Topology load_topology(std::istream& in) {
  Topology t;
  bool saw_mode = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto f = split_ws(line);
    if (f[0] == "MODE" && f.size() == 2) {
      if (f[1] == "P1") t.mode = Mode::P1;
      else if (f[1] == "P1_5") t.mode = Mode::P1_5;
      else if (f[1] == "P2") t.mode = Mode::P2;
      else fail(Errc::MalformedConfig, line);
      saw_mode = true;
    } else if (f[0] == "SITE" && f.size() == 3) {
      t.sites.push_back({f[1], f[2]});
    } else if (f[0] == "CENTRAL" && f.size() == 2) {
      t.central = f[1];
    } else if (f[0] == "VO" && f.size() >= 2) {
      Vo vo;
      vo.id = f[1];
      std::size_t i = 2;
      if (i < f.size() && starts_with(f[i], "parent=")) {
        vo.parent = f[i].substr(7);
        ++i;
      }
      for (; i < f.size(); ++i) vo.members.push_back(f[i]);
      t.vos.push_back(vo);
    } else if (f[0] == "ALLOW" && f.size() == 3) {
      t.allow[f[1]].insert(f[2]);
    } else if (f[0] == "LINK") {
      auto l = gridio::parse_link_line(line);
      t.links[{l.from, l.to}] = l;
    } else {
      fail(Errc::MalformedConfig, line);
    }
  }
  if (!saw_mode) fail(Errc::MalformedConfig, "missing MODE line");
  t.validate();
  return t;
}

inline Topology load_topology(const std::string& text) {
  std::istringstream in(text);
  return load_topology(in);
}

// Metadata home for a caller: the central node in P1, the caller's own
// site in the federated modes.
inline std::string catalog_location(const Topology& t, const std::string& caller) {
  if (t.mode == Mode::P1) return *t.central;
  return caller;
}

// ---- certificates ----------------------------------------------------------

struct HostCertificate {
  std::string site;
  std::uint64_t serial = 0;
  std::string issued_by;
  bool revoked = false;
};

class CertRegistry {
 public:
  void add(HostCertificate cert) {
    if (!cert.revoked) {
      // one active certificate per site: issuing a new one revokes the old
      for (auto& c : certs_)
        if (c.site == cert.site) c.revoked = true;
    }
    certs_.push_back(std::move(cert));
  }

  const HostCertificate& active_for(const std::string& site) const {
    for (auto it = certs_.rbegin(); it != certs_.rend(); ++it)
      if (it->site == site && !it->revoked) return *it;
    fail(Errc::RevokedCertificate, site);
  }

  void revoke(const std::string& site) {
    for (auto& c : certs_)
      if (c.site == site) c.revoked = true;
  }

  // "CERT <site> <serial> <authority> <active|revoked>"
  void load_line(const std::string& line) {
    auto f = split_ws(line);
    if (f.size() != 5 || f[0] != "CERT" || (f[4] != "active" && f[4] != "revoked"))
      fail(Errc::MalformedConfig, line);
    add({f[1], std::stoull(f[2]), f[3], f[4] == "revoked"});
  }

 private:
  std::vector<HostCertificate> certs_;
};

// ---- sessions and rights -----------------------------------------------------

enum class Right { read, query_local, query_global, replicate, execute, admin };

inline const char* right_name(Right r) {
  switch (r) {
    case Right::read: return "read";
    case Right::query_local: return "query_local";
    case Right::query_global: return "query_global";
    case Right::replicate: return "replicate";
    case Right::execute: return "execute";
    case Right::admin: return "admin";
  }
  return "?";
}

inline std::optional<Right> parse_right(const std::string& s) {
  for (Right r : {Right::read, Right::query_local, Right::query_global,
                  Right::replicate, Right::execute, Right::admin})
    if (s == right_name(r)) return r;
  return std::nullopt;
}

using Rights = std::set<Right>;

struct Session {
  std::string session_id;  // 128-bit random, 32 hex chars
  std::string user;
  std::string home_site;
  Rights rights;
  double opened_at = 0;

  bool has(Right r) const { return rights.count(r) > 0; }
};

class UserRegistry {
 public:
  void grant(const std::string& site, const std::string& user, Rights rights) {
    granted_[{site, user}] = std::move(rights);
  }

  bool known(const std::string& site, const std::string& user) const {
    return granted_.count({site, user}) > 0;
  }

  const Rights& rights_of(const std::string& site, const std::string& user) const {
    auto it = granted_.find({site, user});
    if (it == granted_.end()) fail(Errc::UnknownUser, user + "@" + site);
    return it->second;
  }

 private:
  std::map<std::pair<std::string, std::string>, Rights> granted_;
};

// GAS-factory behavior: an authenticated per-user session instance created
// on demand at the user's home site, rights fixed at open.
inline Session open_session(const std::string& user, const HostCertificate& cert,
                            const Rights& requested, const UserRegistry& registry,
                            std::uint64_t& session_rng_state, double opened_at = 0) {
  if (cert.revoked) fail(Errc::RevokedCertificate, cert.site);
  if (!registry.known(cert.site, user)) fail(Errc::UnknownUser, user + "@" + cert.site);

  Session s;
  std::uint64_t a = mix64(++session_rng_state);
  std::uint64_t b = mix64(++session_rng_state);
  std::uint8_t idb[16];
  for (int i = 0; i < 8; ++i) idb[i] = std::uint8_t(a >> (8 * i));
  for (int i = 0; i < 8; ++i) idb[8 + i] = std::uint8_t(b >> (8 * i));
  s.session_id = to_hex(idb, 16);
  s.user = user;
  s.home_site = cert.site;
  const Rights& granted = registry.rights_of(cert.site, user);
  for (Right r : requested)
    if (granted.count(r)) s.rights.insert(r);
  s.opened_at = opened_at;
  return s;
}

// ---- authorization -----------------------------------------------------------

enum class DenyReason { None, MissingRight, NotAllowlisted, VoBoundary };

struct Decision {
  bool allowed = false;
  DenyReason reason = DenyReason::None;

  static Decision allow() { return {true, DenyReason::None}; }
  static Decision deny(DenyReason r) { return {false, r}; }
};

inline const char* deny_reason_name(DenyReason r) {
  switch (r) {
    case DenyReason::None: return "ok";
    case DenyReason::MissingRight: return "MissingRight";
    case DenyReason::NotAllowlisted: return "NotAllowlisted";
    case DenyReason::VoBoundary: return "VoBoundary";
  }
  return "?";
}

inline Decision authorize(const Session& session, Right op,
                          const std::string& target_site, const Topology& topology) {
  if (!session.has(op)) return Decision::deny(DenyReason::MissingRight);
  if (!topology.allows(target_site, session.home_site))
    return Decision::deny(DenyReason::NotAllowlisted);
  if (topology.mode == Mode::P2 &&
      !topology.vo_scope(session.home_site).count(target_site))
    return Decision::deny(DenyReason::VoBoundary);
  return Decision::allow();
}

// ---- WAN audit ----------------------------------------------------------------

enum class MsgClass { query, result, transfer, job, control };

inline const char* msg_class_name(MsgClass c) {
  switch (c) {
    case MsgClass::query: return "query";
    case MsgClass::result: return "result";
    case MsgClass::transfer: return "transfer";
    case MsgClass::job: return "job";
    case MsgClass::control: return "control";
  }
  return "?";
}

struct CapturedMessage {
  std::string from;
  std::string to;
  MsgClass cls = MsgClass::control;
  std::string payload;  // captured for leak scans
};

struct PairCounters {
  std::uint64_t messages_sent = 0;
  std::uint64_t bytes_sent = 0;

  friend bool operator==(const PairCounters&, const PairCounters&) = default;
};

// Exact per-site-pair message/byte accounting with payload capture.
class WanAudit {
 public:
  void record(const std::string& from, const std::string& to, MsgClass cls,
              const std::string& payload) {
    std::lock_guard<std::mutex> lock(mu_);
    auto& c = pairs_[{from, to}];
    c.messages_sent += 1;
    c.bytes_sent += payload.size();
    class_messages_[cls] += 1;
    captured_.push_back({from, to, cls, payload});
  }

  PairCounters pair(const std::string& from, const std::string& to) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = pairs_.find({from, to});
    return it == pairs_.end() ? PairCounters{} : it->second;
  }

  std::uint64_t total_messages() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::uint64_t n = 0;
    for (const auto& [_, c] : pairs_) n += c.messages_sent;
    return n;
  }

  std::uint64_t total_bytes() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::uint64_t n = 0;
    for (const auto& [_, c] : pairs_) n += c.bytes_sent;
    return n;
  }

  std::uint64_t class_messages(MsgClass cls) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = class_messages_.find(cls);
    return it == class_messages_.end() ? 0 : it->second;
  }

  std::vector<CapturedMessage> captured() const {
    std::lock_guard<std::mutex> lock(mu_);
    return captured_;
  }

  std::map<std::pair<std::string, std::string>, PairCounters> snapshot() const {
    std::lock_guard<std::mutex> lock(mu_);
    return pairs_;
  }

  // Tab-separated table, sorted by site pair: from to messages bytes.
  std::string report() const {
    auto snap = snapshot();
    std::string out = "from\tto\tmessages\tbytes\n";
    for (const auto& [key, c] : snap)
      out += key.first + "\t" + key.second + "\t" + std::to_string(c.messages_sent) +
             "\t" + std::to_string(c.bytes_sent) + "\n";
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, PairCounters> pairs_;
  std::map<MsgClass, std::uint64_t> class_messages_;
  std::vector<CapturedMessage> captured_;
};

}  // namespace hospigrid::federation
