#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hospigrid/catalog.hpp"
#include "hospigrid/common.hpp"
#include "hospigrid/federation.hpp"
#include "hospigrid/gridio.hpp"
#include "hospigrid/jobs.hpp"
#include "hospigrid/model.hpp"
#include "hospigrid/query.hpp"
#include "hospigrid/transport.hpp"

namespace hospigrid {

using federation::MsgClass;
using federation::Right;
using federation::Session;
using federation::Topology;

enum class Backend { inproc, socket };

// One grid box: the hospital's storage element, catalogs and local services.
struct SiteNode {
  explicit SiteNode(const std::string& name, const std::string& data_dir,
                    std::uint64_t capacity)
      : catalog(name, data_dir, capacity) {}

  catalog::SiteCatalog catalog;
  // Replicas physically held here whose grid_db entry lives elsewhere.
  std::map<std::string, catalog::ReplicaEntry> replica_cache;
  std::recursive_mutex mu;
};

struct QueryOutcome {
  query::ResultDoc doc;
  std::vector<std::string> unavailable_sites;
};

// The federation: per-site nodes wired together by a transport backend,
// with session management, WAN auditing and a shared virtual clock.
class Grid {
 public:
  struct Options {
    std::string data_dir;           // empty = in-memory only
    std::uint64_t seed = 0;
    Backend backend = Backend::inproc;
    std::uint64_t storage_capacity = UINT64_MAX;
  };

  explicit Grid(Topology topology) : Grid(std::move(topology), Options{}) {}

  Grid(Topology topology, Options options)
      : topology_(std::move(topology)), options_(options), session_rng_(options.seed) {
    if (options_.backend == Backend::inproc)
      transport_ = std::make_unique<transport::InprocBus>(topology_, audit_, clock_);
    else
      transport_ = std::make_unique<transport::SocketTransport>(topology_, audit_, clock_);

    std::uint64_t serial = 1;
    for (const auto& s : topology_.sites) {
      nodes_[s.name] = std::make_unique<SiteNode>(s.name, options_.data_dir,
                                                  options_.storage_capacity);
      certs_.add({s.name, serial++, "mammogrid-ca", false});
      transport_->register_handler(s.name, [this, site = s.name](
                                               const transport::Envelope& env) {
        return handle(site, env);
      });
    }
  }

  const Topology& topology() const { return topology_; }
  federation::WanAudit& audit() { return audit_; }
  gridio::SimClock& clock() { return clock_; }
  federation::CertRegistry& certs() { return certs_; }
  federation::UserRegistry& users() { return users_; }
  transport::Transport& wire() { return *transport_; }

  SiteNode& node(const std::string& site) {
    auto it = nodes_.find(site);
    if (it == nodes_.end()) fail(Errc::UnknownSite, site);
    return *it->second;
  }

  void stop_site(const std::string& site) { transport_->stop_site(site); }
  void start_site(const std::string& site) { transport_->start_site(site); }
  bool is_down(const std::string& site) const { return transport_->is_down(site); }

  std::vector<std::string> live_sites() const {
    std::vector<std::string> out;
    for (const auto& s : topology_.sites)
      if (!transport_->is_down(s.name)) out.push_back(s.name);
    std::sort(out.begin(), out.end());
    return out;
  }

  void add_user(const std::string& site, const std::string& user,
                federation::Rights rights) {
    users_.grant(site, user, std::move(rights));
  }

  // Grants the stock users at every site: "clinician" with the operational
  // rights and "admin" with everything.
  void add_default_users() {
    using federation::Right;
    federation::Rights clinician{Right::read, Right::query_local, Right::query_global,
                                 Right::replicate, Right::execute};
    federation::Rights all = clinician;
    all.insert(Right::admin);
    for (const auto& s : topology_.sites) {
      add_user(s.name, "clinician", clinician);
      add_user(s.name, "admin", all);
    }
  }

  Session open_session(const std::string& site, const std::string& user,
                       const federation::Rights& requested) {
    const auto& cert = certs_.active_for(site);
    return federation::open_session(user, cert, requested, users_, session_rng_,
                                    clock_.now());
  }

  // Per-site keys for pseudonymization and sealing.
  Bytes site_key(const std::string& site) const {
    auto d = sha256("site-key:" + site + ":" + std::to_string(options_.seed));
    return Bytes(d.begin(), d.end());
  }

  // ---- ingest -----------------------------------------------------------------

  struct ImportResult {
    std::string lfn;
    std::string guid;
    std::string pseudonym;
  };

  ImportResult import_file(const Session& session, const Bytes& raw_bytes,
                           std::string lfn = "") {
    const std::string& site = session.home_site;
    auto file = model::parse_dicom_lite(raw_bytes);
    auto [pseudo_file, patient] = model::pseudonymize(file, site, site_key(site));
    if (lfn.empty())
      lfn = "/mammogrid/" + site + "/" + pseudo_file.required_tag("ImageID") + ".dcml";
    catalog::validate_lfn(lfn);
    Bytes content = pseudo_file.serialize();
    auto record = model::extract_metadata(pseudo_file, lfn, topology_.site(site));

    SiteNode& n = node(site);
    std::lock_guard<std::recursive_mutex> lock(n.mu);
    if (n.catalog.local_db().has_image(record.image_id))
      fail(Errc::DuplicateImageId, record.image_id);

    std::string meta_home = federation::catalog_location(topology_, site);
    std::string guid = catalog::guid_for_content(content);
    std::string hash = digest_hex(sha256(content));
    if (meta_home == site) {
      guid = n.catalog.register_file(lfn, content);
      n.catalog.record_image(record);
      n.catalog.record_patient(patient);
    } else {
      // P1: bytes stay on the local node, metadata goes to the central node
      if (lookup_remote(site, meta_home, lfn).has_value()) fail(Errc::DuplicateLfn, lfn);
      n.catalog.store_bytes(lfn, content, hash);
      catalog::ReplicaEntry rep{guid, site, lfn, content.size(), hash};
      transport_->request(site, meta_home, MsgClass::control,
                          "CATREG " + replica_fields(lfn, rep));
      transport_->request(site, meta_home, MsgClass::control, rows_payload(record, patient));
    }
    n.replica_cache[lfn] = {guid, site, lfn, content.size(), hash};
    return {lfn, guid, patient.pseudonym};
  }

  // ---- catalog resolution --------------------------------------------------------

  struct Resolved {
    std::string owner;  // site whose grid_db holds the entry
    catalog::CatalogEntry entry;
  };

  Resolved resolve(const std::string& caller, const std::string& lfn) {
    std::string meta_home = federation::catalog_location(topology_, caller);
    if (meta_home == caller) {
      {
        SiteNode& n = node(caller);
        std::lock_guard<std::recursive_mutex> lock(n.mu);
        if (n.catalog.has(lfn)) return {caller, n.catalog.lookup(lfn)};
      }
      if (topology_.mode != federation::Mode::P1) {
        // federated namespace: probe the other sites in name order
        std::vector<std::string> others;
        for (const auto& s : topology_.sites)
          if (s.name != caller) others.push_back(s.name);
        std::sort(others.begin(), others.end());
        for (const auto& other : others) {
          if (transport_->is_down(other)) continue;
          auto entry = lookup_remote(caller, other, lfn);
          if (entry) return {other, *entry};
        }
      }
      fail(Errc::UnknownLfn, lfn);
    }
    auto entry = lookup_remote(caller, meta_home, lfn);
    if (!entry) fail(Errc::UnknownLfn, lfn);
    return {meta_home, *entry};
  }

  // ---- query pipeline --------------------------------------------------------------

  QueryOutcome run_query(const Session& session, const query::QueryDoc& doc) {
    const std::string& origin = session.home_site;
    Right needed = doc.scope == query::Scope::Global ? Right::query_global
                                                     : Right::query_local;
    auto decision = federation::authorize(session, needed, origin, topology_);
    if (!decision.allowed)
      fail(Errc::NotAuthorized, federation::deny_reason_name(decision.reason));
    // validate against the schema before any fan-out
    query::validate_query(doc, catalog::default_schema());

    std::vector<query::ResultSet> parts;
    std::vector<std::string> contributing;
    std::vector<std::string> unavailable;

    auto run_at = [&](const std::string& site) {
      if (site == origin) {
        parts.push_back(execute_at(site, doc));
        contributing.push_back(site);
        return;
      }
      if (transport_->is_down(site)) {
        unavailable.push_back(site);
        return;
      }
      try {
        std::string resp = transport_->request(origin, site, MsgClass::query,
                                               "EXECQ\n" + query::serialize_query_doc(doc));
        parts.push_back(parse_remote_result(resp));
        contributing.push_back(site);
      } catch (const GridError& e) {
        if (e.code() != Errc::SiteUnavailable) throw;
        unavailable.push_back(site);
      }
    };

    if (topology_.mode == federation::Mode::P1) {
      // all metadata reads go to the central catalog
      run_at(*topology_.central);
    } else if (doc.scope == query::Scope::Local) {
      run_at(origin);
    } else {
      auto scope = topology_.vo_scope(origin);
      std::vector<std::string> targets(scope.begin(), scope.end());
      std::sort(targets.begin(), targets.end());
      for (const auto& site : targets) {
        if (site != origin) {
          auto d = federation::authorize(session, needed, site, topology_);
          if (!d.allowed) continue;  // out-of-scope or not allowlisted: no message
        }
        run_at(site);
      }
    }

    auto merged = query::merge_results(parts);
    QueryOutcome out;
    out.doc = query::translate_results(merged.result, merged.dedup_count, contributing);
    out.unavailable_sites = std::move(unavailable);
    return out;
  }

  // ---- file movement (mirror / get / cat) ---------------------------------------------

  gridio::TransferReceipt mirror(const Session& session, const std::string& lfn,
                                 const std::string& target) {
    auto decision = federation::authorize(session, Right::replicate, target, topology_);
    if (!decision.allowed)
      fail(Errc::NotAuthorized, federation::deny_reason_name(decision.reason));
    if (!topology_.has_site(target)) fail(Errc::UnknownSite, target);
    if (transport_->is_down(target)) fail(Errc::SiteUnavailable, target);

    auto resolved = resolve(session.home_site, lfn);
    for (const auto& r : resolved.entry.replicas)
      if (r.site == target) fail(Errc::AlreadyReplicated, target);

    // source replica = first registered replica
    const auto& src = resolved.entry.replicas.front();
    if (transport_->is_down(src.site)) fail(Errc::SiteUnavailable, src.site);
    Bytes content = read_replica(src.site, lfn);

    double started = clock_.now();
    if (src.site != target)
      transport_->request(src.site, target, MsgClass::transfer,
                          "STORE " + lfn + " " + src.guid + " " + src.site + "\n" +
                              to_string(content));
    const auto& link = topology_.link(src.site, target);
    double duration = gridio::transfer_time(content.size(), link, gridio::TransferMode::grid);
    clock_.advance(duration);

    catalog::ReplicaEntry rep{src.guid, target, lfn, content.size(), src.content_hash};
    if (resolved.owner == session.home_site) {
      SiteNode& n = node(resolved.owner);
      std::lock_guard<std::recursive_mutex> lock(n.mu);
      n.catalog.add_replica(lfn, rep);
    } else {
      transport_->request(session.home_site, resolved.owner, MsgClass::control,
                          "CATREPL " + replica_fields(lfn, rep));
    }

    gridio::TransferReceipt receipt{lfn, src.site, target, content.size(),
                                    started, started + duration,
                                    gridio::TransferMode::grid};
    receipts_.push_back(receipt);
    return receipt;
  }

  std::pair<Bytes, gridio::TransferReceipt> get(const Session& session,
                                                const std::string& lfn,
                                                const std::string& dest) {
    auto decision = federation::authorize(session, Right::read, dest, topology_);
    if (!decision.allowed)
      fail(Errc::NotAuthorized, federation::deny_reason_name(decision.reason));

    // a locally held replica is a zero-cost direct read
    {
      SiteNode& n = node(dest);
      std::lock_guard<std::recursive_mutex> lock(n.mu);
      auto it = n.replica_cache.find(lfn);
      if (it != n.replica_cache.end()) {
        gridio::TransferReceipt receipt{lfn, dest, dest, it->second.size_bytes,
                                        clock_.now(), clock_.now(),
                                        gridio::TransferMode::direct};
        receipts_.push_back(receipt);
        return {n.catalog.storage().get(it->second.physical_path), receipt};
      }
    }

    auto resolved = resolve(dest, lfn);
    for (const auto& r : resolved.entry.replicas)
      if (r.site == dest) {
        // entry says we hold it (e.g. after restart); serve locally
        SiteNode& n = node(dest);
        std::lock_guard<std::recursive_mutex> lock(n.mu);
        gridio::TransferReceipt receipt{lfn, dest, dest, r.size_bytes, clock_.now(),
                                        clock_.now(), gridio::TransferMode::direct};
        receipts_.push_back(receipt);
        return {n.catalog.storage().get(r.physical_path), receipt};
      }

    // nearest replica = minimum grid-mode transfer time, ties by site name
    const catalog::ReplicaEntry* best = nullptr;
    double best_time = 0;
    for (const auto& r : resolved.entry.replicas) {
      if (transport_->is_down(r.site)) continue;
      auto it = topology_.links.find({r.site, dest});
      if (it == topology_.links.end()) continue;
      double t = gridio::transfer_time(r.size_bytes, it->second, gridio::TransferMode::grid);
      if (!best || t < best_time || (t == best_time && r.site < best->site)) {
        best = &r;
        best_time = t;
      }
    }
    if (!best) fail(Errc::SiteUnavailable, "no reachable replica of " + lfn);

    double started = clock_.now();
    std::string resp = transport_->request(dest, best->site, MsgClass::transfer,
                                           "FETCH " + lfn);
    Bytes content = to_bytes(resp.substr(3));  // "OK\n" prefix
    clock_.advance(best_time);
    gridio::TransferReceipt receipt{lfn, best->site, dest, content.size(), started,
                                    started + best_time, gridio::TransferMode::grid};
    receipts_.push_back(receipt);
    return {content, receipt};
  }

  // Human-readable rendering; pixel bytes are elided, never transmitted to
  // the console.
  std::string cat(const Session& session, const std::string& lfn,
                  const std::string& viewer) {
    auto [content, receipt] = get(session, lfn, viewer);
    (void)receipt;
    auto file = model::parse_dicom_lite(content);
    std::string out;
    for (const auto& [k, v] : file.tags) out += k + "=" + v + "\n";
    out += "PIXELS " + std::to_string(file.pixel_data.size()) + "\n";
    return out;
  }

  // ---- jobs ---------------------------------------------------------------------------

  jobs::Placement submit(const jobs::JobSpec& spec, const jobs::PlacementPolicy& policy) {
    const Session& session = spec.submitted_by;
    auto live = live_sites();
    if (live.empty()) fail(Errc::NoLiveSites);

    // resolve every input up front; UnknownLfn surfaces before placement
    std::map<std::string, catalog::CatalogEntry> entries;
    for (const auto& lfn : spec.input_lfns)
      entries[lfn] = resolve(session.home_site, lfn).entry;

    std::string chosen;
    if (policy.kind == jobs::PlacementPolicy::Kind::Random) {
      chosen = live[jobs::random_site_index(policy.seed, job_ordinal_, live.size())];
    } else {
      std::map<std::string, std::uint64_t> local_bytes;
      for (const auto& s : live) local_bytes[s] = 0;
      for (const auto& [lfn, entry] : entries)
        for (const auto& r : entry.replicas)
          if (local_bytes.count(r.site)) local_bytes[r.site] += r.size_bytes;
      chosen = jobs::data_local_site(local_bytes);
    }
    ++job_ordinal_;

    auto decision = federation::authorize(session, Right::execute, chosen, topology_);
    if (!decision.allowed)
      fail(Errc::NotAuthorized, federation::deny_reason_name(decision.reason));

    jobs::Placement placement{spec.job_id, chosen, policy, 0};
    for (const auto& [lfn, entry] : entries) {
      bool local = false;
      for (const auto& r : entry.replicas)
        if (r.site == chosen) local = true;
      if (!local) placement.wan_bytes_incurred += entry.replicas.front().size_bytes;
    }
    placements_.push_back(placement);
    return placement;
  }

  jobs::JobResult run_job(const jobs::Placement& placement, const jobs::JobSpec& spec) {
    jobs::JobResult result;
    result.job_id = spec.job_id;
    try {
      // stage missing inputs to the chosen site
      std::vector<Bytes> inputs;
      for (const auto& lfn : spec.input_lfns)
        inputs.push_back(get(spec.submitted_by, lfn, placement.chosen_site).first);

      const std::string& primary_lfn = spec.input_lfns.front();
      Bytes output;
      if (spec.kind == jobs::JobKind::SMF) {
        auto file = model::parse_dicom_lite(inputs.front());
        output = jobs::smf_stub(file).serialize();
      } else {
        auto file = model::parse_dicom_lite(inputs.front());
        output = to_bytes(jobs::cade_stub(file));
      }

      result.output_lfn = primary_lfn + "." + jobs::kind_name(spec.kind) + ".out";
      register_at(placement.chosen_site, result.output_lfn, output);
      result.digest = digest_hex(sha256(output));
      result.status = jobs::JobStatus::Done;
    } catch (const GridError& e) {
      result.status = jobs::JobStatus::Failed;
      result.failure_reason = e.what();
    }
    results_.push_back(result);
    return result;
  }

  const std::vector<jobs::Placement>& placements() const { return placements_; }
  const std::vector<jobs::JobResult>& job_results() const { return results_; }
  const std::vector<gridio::TransferReceipt>& receipts() const { return receipts_; }

  // ---- state snapshot (authorization-soundness checks) ---------------------------------

  std::string state_snapshot() {
    std::string out;
    for (const auto& s : topology_.sites) {
      SiteNode& n = node(s.name);
      std::lock_guard<std::recursive_mutex> lock(n.mu);
      out += "== " + s.name + "\n";
      out += n.catalog.snapshot();
      out += "storage_used " + std::to_string(n.catalog.storage().used_bytes()) + "\n";
      out += "images " + std::to_string(n.catalog.local_db().image_count()) + "\n";
      for (const auto& [lfn, rep] : n.replica_cache)
        out += "cache " + lfn + " " + rep.content_hash + "\n";
    }
    out += "jobs " + std::to_string(results_.size()) + " placements " +
           std::to_string(placements_.size()) + "\n";
    return out;
  }

 private:
  // Registers freshly produced bytes (job outputs) held at `site`.
  void register_at(const std::string& site, const std::string& lfn, const Bytes& content) {
    std::string meta_home = federation::catalog_location(topology_, site);
    std::string guid = catalog::guid_for_content(content);
    std::string hash = digest_hex(sha256(content));
    SiteNode& n = node(site);
    std::lock_guard<std::recursive_mutex> lock(n.mu);
    if (meta_home == site) {
      n.catalog.register_file(lfn, content);
    } else {
      n.catalog.store_bytes(lfn, content, hash);
      catalog::ReplicaEntry rep{guid, site, lfn, content.size(), hash};
      transport_->request(site, meta_home, MsgClass::control,
                          "CATREG " + replica_fields(lfn, rep));
    }
    n.replica_cache[lfn] = {guid, site, lfn, content.size(), hash};
  }

  Bytes read_replica(const std::string& site, const std::string& lfn) {
    SiteNode& n = node(site);
    std::lock_guard<std::recursive_mutex> lock(n.mu);
    return n.catalog.storage().get(lfn);
  }

  static std::string replica_fields(const std::string& lfn,
                                    const catalog::ReplicaEntry& r) {
    return lfn + "\t" + r.guid + "\t" + r.site + "\t" + r.physical_path + "\t" +
           std::to_string(r.size_bytes) + "\t" + r.content_hash;
  }

  static std::string rows_payload(const model::ImageRecord& img,
                                  const model::PatientRecord& pat) {
    return "ROWS\nIMG\t" + img.image_id + "\t" + img.patient_pseudonym + "\t" +
           img.study_date + "\t" + img.modality + "\t" + img.lfn + "\t" +
           img.site_of_origin + "\nPAT\t" + pat.pseudonym + "\t" + pat.site_of_origin +
           "\t" + to_hex(pat.personal_fields_sealed) + "\n";
  }

  std::optional<catalog::CatalogEntry> lookup_remote(const std::string& caller,
                                                     const std::string& owner,
                                                     const std::string& lfn) {
    try {
      std::string resp = transport_->request(caller, owner, MsgClass::control,
                                             "CATLOOK " + lfn);
      return parse_entry(resp.substr(3));
    } catch (const GridError& e) {
      if (e.code() == Errc::UnknownLfn) return std::nullopt;
      throw;
    }
  }

  static catalog::CatalogEntry parse_entry(const std::string& text) {
    catalog::CatalogEntry entry;
    for (const auto& line : split(text, '\n')) {
      if (line.empty()) continue;
      auto f = split(line, '\t');
      if (f[0] == "GUID" && f.size() == 2) {
        entry.guid = f[1];
      } else if (f[0] == "REP" && f.size() == 6) {
        entry.replicas.push_back({f[1], f[2], f[3], std::stoull(f[4]), f[5]});
      } else {
        fail(Errc::MalformedConfig, "bad catalog entry line: " + line);
      }
    }
    return entry;
  }

  query::ResultSet execute_at(const std::string& site, const query::QueryDoc& doc) {
    SiteNode& n = node(site);
    std::lock_guard<std::recursive_mutex> lock(n.mu);
    auto plan = query::translate_query(doc, n.catalog.metadata_db());
    return query::execute_local(plan, n.catalog.local_db(), site);
  }

  static query::ResultSet parse_remote_result(const std::string& resp) {
    // "OK\nSITE <name>\n<result doc>"
    auto body = resp.substr(3);
    std::size_t eol = body.find('\n');
    if (eol == std::string::npos || !starts_with(body, "SITE "))
      fail(Errc::MalformedConfig, "bad sub-query response");
    auto doc = query::parse_result_doc(body.substr(eol + 1));
    query::ResultSet rs;
    rs.columns = doc.columns;
    rs.rows = doc.rows;
    rs.origin_site = body.substr(5, eol - 5);
    return rs;
  }

  // Message dispatch for one site's grid box.
  std::string handle(const std::string& site, const transport::Envelope& env) {
    if (!topology_.allows(site, env.from))
      fail(Errc::NotAuthorized, "NotAllowlisted");
    SiteNode& n = node(site);
    std::lock_guard<std::recursive_mutex> lock(n.mu);
    const std::string& p = env.payload;

    if (starts_with(p, "ECHO\n")) return "OK\n" + p.substr(5);

    if (starts_with(p, "EXECQ\n")) {
      auto doc = query::parse_query_doc(p.substr(6));
      auto plan = query::translate_query(doc, n.catalog.metadata_db());
      auto rs = query::execute_local(plan, n.catalog.local_db(), site);
      return "OK\nSITE " + site + "\n" +
             query::serialize_result_doc(query::translate_results(rs));
    }

    if (starts_with(p, "FETCH ")) {
      std::string lfn = p.substr(6);
      auto it = n.replica_cache.find(lfn);
      if (it == n.replica_cache.end() && !n.catalog.storage().has(lfn))
        fail(Errc::UnknownLfn, lfn);
      return "OK\n" + to_string(n.catalog.storage().get(lfn));
    }

    if (starts_with(p, "STORE ")) {
      std::size_t eol = p.find('\n');
      auto head = split_ws(p.substr(0, eol));
      if (head.size() != 4) fail(Errc::MalformedConfig, "bad STORE header");
      const std::string& lfn = head[1];
      Bytes content = to_bytes(p.substr(eol + 1));
      std::string hash = digest_hex(sha256(content));
      n.catalog.store_bytes(lfn, content, hash);
      n.replica_cache[lfn] = {head[2], site, lfn, content.size(), hash};
      // replicated medical records become queryable at this site too
      try {
        auto file = model::parse_dicom_lite(content);
        auto rec = model::extract_metadata(file, lfn, topology_.site(site));
        rec.site_of_origin = head[3];  // curation stays with the origin site
        if (!n.catalog.local_db().has_image(rec.image_id)) {
          n.catalog.record_image(rec);
          model::PatientRecord pat;
          pat.pseudonym = rec.patient_pseudonym;
          pat.site_of_origin = rec.site_of_origin;
          n.catalog.record_patient(pat);
        }
      } catch (const GridError&) {
        // non-DICOM payload (job output); nothing to index
      }
      return "OK\n";
    }

    if (starts_with(p, "CATREG ") || starts_with(p, "CATREPL ")) {
      bool is_reg = starts_with(p, "CATREG ");
      auto f = split(p.substr(is_reg ? 7 : 8), '\t');
      if (f.size() != 6) fail(Errc::MalformedConfig, "bad catalog write");
      catalog::ReplicaEntry rep{f[1], f[2], f[3], std::stoull(f[4]), f[5]};
      if (is_reg)
        n.catalog.register_entry(f[0], rep);
      else
        n.catalog.add_replica(f[0], rep);
      return "OK\n";
    }

    if (starts_with(p, "CATLOOK ")) {
      const auto& entry = n.catalog.lookup(p.substr(8));
      std::string out = "OK\nGUID\t" + entry.guid + "\n";
      for (const auto& r : entry.replicas)
        out += "REP\t" + r.guid + "\t" + r.site + "\t" + r.physical_path + "\t" +
               std::to_string(r.size_bytes) + "\t" + r.content_hash + "\n";
      return out;
    }

    if (starts_with(p, "ROWS\n")) {
      for (const auto& line : split(p.substr(5), '\n')) {
        if (line.empty()) continue;
        auto f = split(line, '\t');
        if (f[0] == "IMG" && f.size() == 7) {
          n.catalog.record_image({f[1], f[2], f[3], f[4], f[5], f[6]});
        } else if (f[0] == "PAT" && f.size() == 4) {
          model::PatientRecord pat;
          pat.pseudonym = f[1];
          pat.site_of_origin = f[2];
          for (std::size_t i = 0; i + 1 < f[3].size(); i += 2)
            pat.personal_fields_sealed.push_back(
                std::uint8_t(std::stoi(f[3].substr(i, 2), nullptr, 16)));
          n.catalog.record_patient(pat);
        } else {
          fail(Errc::MalformedConfig, "bad ROWS line: " + line);
        }
      }
      return "OK\n";
    }

    fail(Errc::MalformedConfig, "unknown message verb");
  }

  Topology topology_;
  Options options_;
  federation::WanAudit audit_;
  gridio::SimClock clock_;
  federation::CertRegistry certs_;
  federation::UserRegistry users_;
  std::unique_ptr<transport::Transport> transport_;
  std::map<std::string, std::unique_ptr<SiteNode>> nodes_;
  std::uint64_t session_rng_;
  std::uint64_t job_ordinal_ = 0;
  std::vector<jobs::Placement> placements_;
  std::vector<jobs::JobResult> results_;
  std::vector<gridio::TransferReceipt> receipts_;
};

}  // namespace hospigrid
