#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hospigrid/common.hpp"
#include "hospigrid/model.hpp"

namespace hospigrid::catalog {

// ---- logical names -------------------------------------------------------

inline void validate_lfn(const std::string& path) {
  if (path.empty() || path[0] != '/') fail(Errc::BadLfn, path);
  if (path.find("//") != std::string::npos || path.back() == '/')
    fail(Errc::BadLfn, path);
  if (path.find('\t') != std::string::npos || path.find('\n') != std::string::npos)
    fail(Errc::BadLfn, path);
}

// Guid = content hash truncated to 128 bits, rendered as 32 hex chars.
inline std::string guid_for_content(const Bytes& content) {
  auto d = sha256(content);
  return to_hex(d.data(), 16);
}

struct ReplicaEntry {
  std::string guid;
  std::string site;
  std::string physical_path;
  std::uint64_t size_bytes = 0;
  std::string content_hash;  // full 256-bit digest, 64 hex chars

  friend bool operator==(const ReplicaEntry&, const ReplicaEntry&) = default;
};

// ---- storage element -------------------------------------------------------

class StorageElement {
 public:
  explicit StorageElement(std::uint64_t capacity_bytes = UINT64_MAX)
      : capacity_(capacity_bytes) {}

  void put(const std::string& physical_path, Bytes content) {
    auto it = files_.find(physical_path);
    std::uint64_t old = it == files_.end() ? 0 : it->second.size();
    if (used_ - old + content.size() > capacity_) fail(Errc::StorageFull, physical_path);
    used_ = used_ - old + content.size();
    files_[physical_path] = std::move(content);
  }

  const Bytes& get(const std::string& physical_path) const {
    auto it = files_.find(physical_path);
    if (it == files_.end()) fail(Errc::UnknownLfn, physical_path);
    return it->second;
  }

  bool has(const std::string& physical_path) const { return files_.count(physical_path); }
  void remove(const std::string& physical_path) {
    auto it = files_.find(physical_path);
    if (it == files_.end()) return;
    used_ -= it->second.size();
    files_.erase(it);
  }
  std::uint64_t used_bytes() const { return used_; }
  std::uint64_t capacity_bytes() const { return capacity_; }

 private:
  std::map<std::string, Bytes> files_;
  std::uint64_t capacity_;
  std::uint64_t used_ = 0;
};

// ---- schema descriptor (metadata_db) ---------------------------------------

struct Schema {
  // table -> columns; first column is the primary key
  std::map<std::string, std::vector<std::string>> tables;

  bool has_table(const std::string& t) const { return tables.count(t); }
  bool has_column(const std::string& t, const std::string& c) const {
    auto it = tables.find(t);
    if (it == tables.end()) return false;
    for (const auto& col : it->second)
      if (col == c) return true;
    return false;
  }
  const std::vector<std::string>& columns(const std::string& t) const {
    auto it = tables.find(t);
    if (it == tables.end()) fail(Errc::UnknownTable, t);
    return it->second;
  }
};

inline const Schema& default_schema() {
  static const Schema s{{
      {"patients", {"pseudonym", "site_of_origin"}},
      {"studies", {"study_id", "patient_pseudonym", "study_date"}},
      {"images",
       {"image_id", "patient_pseudonym", "study_date", "modality", "lfn",
        "site_of_origin"}},
  }};
  return s;
}

// ---- local database (medical records) ---------------------------------------

using Row = std::vector<std::string>;

class LocalDb {
 public:
  LocalDb() : schema_(default_schema()) {}

  const Schema& schema() const { return schema_; }

  void insert_image(const model::ImageRecord& r) {
    if (image_ids_.count(r.image_id)) fail(Errc::DuplicateImageId, r.image_id);
    image_ids_.insert(r.image_id);
    images_.push_back({r.image_id, r.patient_pseudonym, r.study_date, r.modality,
                       r.lfn, r.site_of_origin});
    std::string study_id = r.patient_pseudonym + ":" + r.study_date;
    if (!study_ids_.count(study_id)) {
      study_ids_.insert(study_id);
      studies_.push_back({study_id, r.patient_pseudonym, r.study_date});
    }
  }

  void insert_patient(const model::PatientRecord& r) {
    if (patient_ids_.count(r.pseudonym)) return;  // idempotent re-ingest
    patient_ids_.insert(r.pseudonym);
    patients_.push_back({r.pseudonym, r.site_of_origin});
    sealed_[r.pseudonym] = r.personal_fields_sealed;
  }

  const std::vector<Row>& rows(const std::string& table) const {
    if (table == "images") return images_;
    if (table == "studies") return studies_;
    if (table == "patients") return patients_;
    fail(Errc::UnknownTable, table);
  }

  bool has_image(const std::string& image_id) const { return image_ids_.count(image_id); }
  std::size_t image_count() const { return images_.size(); }

  const std::map<std::string, Bytes>& sealed_fields() const { return sealed_; }

 private:
  Schema schema_;
  std::vector<Row> images_, studies_, patients_;
  std::set<std::string> image_ids_, study_ids_, patient_ids_;
  std::map<std::string, Bytes> sealed_;
};

// ---- grid database (replica catalog) -----------------------------------------

struct CatalogEntry {
  std::string guid;
  std::vector<ReplicaEntry> replicas;  // registration order
};

// Per-site catalog bundle: grid_db, local_db, metadata_db plus the storage
// element. State changes are appended to a per-site log and can be replayed
// bit-exactly at startup.
class SiteCatalog {
 public:
  explicit SiteCatalog(std::string site_name, std::string data_dir = "",
                       std::uint64_t storage_capacity = UINT64_MAX)
      : site_(std::move(site_name)), data_dir_(std::move(data_dir)),
        storage_(storage_capacity) {
    if (!data_dir_.empty()) {
      std::filesystem::create_directories(dir() + "/se");
      replay();
      log_.open(log_path(), std::ios::app | std::ios::binary);
      dblog_.open(dblog_path(), std::ios::app | std::ios::binary);
    }
  }

  const std::string& site() const { return site_; }
  StorageElement& storage() { return storage_; }
  const StorageElement& storage() const { return storage_; }
  LocalDb& local_db() { return local_db_; }
  const LocalDb& local_db() const { return local_db_; }
  const Schema& metadata_db() const { return local_db_.schema(); }

  // Registers content held at this site: stores the bytes and creates the
  // grid_db entry with one replica.
  std::string register_file(const std::string& lfn, const Bytes& content) {
    validate_lfn(lfn);
    if (entries_.count(lfn)) fail(Errc::DuplicateLfn, lfn);
    std::string guid = guid_for_content(content);
    std::string hash = digest_hex(sha256(content));
    store_bytes(lfn, content, hash);
    register_entry(lfn, {guid, site_, lfn, content.size(), hash});
    return guid;
  }

  // grid_db write only; the replica's bytes live at rep.site's storage
  // element (P1 central catalog registering files held at local nodes).
  void register_entry(const std::string& lfn, const ReplicaEntry& rep) {
    validate_lfn(lfn);
    if (entries_.count(lfn)) fail(Errc::DuplicateLfn, lfn);
    CatalogEntry e;
    e.guid = rep.guid;
    e.replicas.push_back(rep);
    entries_[lfn] = e;
    append_log("REG\t" + lfn + "\t" + rep.guid + "\t" + rep.site + "\t" +
               rep.physical_path + "\t" + std::to_string(rep.size_bytes) + "\t" +
               rep.content_hash);
    write_audit_.push_back("REG " + lfn);
  }

  // Records a replica held at another site (or locally after a mirror).
  void add_replica(const std::string& lfn, const ReplicaEntry& rep) {
    auto it = entries_.find(lfn);
    if (it == entries_.end()) fail(Errc::UnknownLfn, lfn);
    for (const auto& r : it->second.replicas)
      if (r.site == rep.site) fail(Errc::AlreadyReplicated, rep.site);
    it->second.replicas.push_back(rep);
    append_log("REPL\t" + lfn + "\t" + rep.guid + "\t" + rep.site + "\t" +
               rep.physical_path + "\t" + std::to_string(rep.size_bytes) + "\t" +
               rep.content_hash);
    write_audit_.push_back("REPL " + lfn + " " + rep.site);
  }

  void remove(const std::string& lfn) {
    auto it = entries_.find(lfn);
    if (it == entries_.end()) fail(Errc::UnknownLfn, lfn);
    entries_.erase(it);
    append_log("DEL\t" + lfn);
    write_audit_.push_back("DEL " + lfn);
  }

  bool has(const std::string& lfn) const { return entries_.count(lfn); }

  // Stores replica bytes in this site's storage element (mirror target side).
  void store_bytes(const std::string& ppath, const Bytes& content,
                   const std::string& content_hash) {
    storage_.put(ppath, content);
    if (!data_dir_.empty()) {
      std::ofstream out(blob_path(content_hash), std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(content.data()),
                std::streamsize(content.size()));
    }
  }

  void record_image(const model::ImageRecord& r) {
    local_db_.insert_image(r);
    append_dblog("IMG\t" + r.image_id + "\t" + r.patient_pseudonym + "\t" +
                 r.study_date + "\t" + r.modality + "\t" + r.lfn + "\t" +
                 r.site_of_origin);
  }

  void record_patient(const model::PatientRecord& r) {
    local_db_.insert_patient(r);
    append_dblog("PAT\t" + r.pseudonym + "\t" + r.site_of_origin + "\t" +
                 to_hex(r.personal_fields_sealed));
  }

  const CatalogEntry& lookup(const std::string& lfn) const {
    auto it = entries_.find(lfn);
    if (it == entries_.end()) fail(Errc::UnknownLfn, lfn);
    return it->second;
  }

  std::vector<std::string> list_namespace(const std::string& prefix) const {
    if (prefix.empty() || prefix[0] != '/') fail(Errc::BadLfn, prefix);
    std::vector<std::string> out;
    for (const auto& [lfn, _] : entries_)  // std::map iterates sorted
      if (starts_with(lfn, prefix)) out.push_back(lfn);
    return out;
  }

  const std::vector<std::string>& write_audit() const { return write_audit_; }

  // Deterministic snapshot of grid_db state, for replay-equality checks.
  std::string snapshot() const {
    std::string out;
    for (const auto& [lfn, e] : entries_) {
      out += lfn + " " + e.guid + "\n";
      for (const auto& r : e.replicas)
        out += "  " + r.site + " " + r.physical_path + " " +
               std::to_string(r.size_bytes) + " " + r.content_hash + "\n";
    }
    return out;
  }

 private:
  std::string dir() const { return data_dir_ + "/" + site_; }
  std::string log_path() const { return dir() + "/catalog.log"; }
  std::string dblog_path() const { return dir() + "/localdb.log"; }
  std::string blob_path(const std::string& content_hash) const {
    return dir() + "/se/" + content_hash + ".bin";
  }

  void append_log(const std::string& line) {
    if (log_.is_open()) {
      log_ << line << "\n";
      log_.flush();
    }
  }

  void append_dblog(const std::string& line) {
    if (dblog_.is_open()) {
      dblog_ << line << "\n";
      dblog_.flush();
    }
  }

  void replay() {
    std::ifstream in(log_path(), std::ios::binary);
    std::string line;
    while (in && std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = split(line, '\t');
      if (f[0] == "REG" && f.size() == 7) {
        CatalogEntry e;
        e.guid = f[2];
        e.replicas.push_back({f[2], f[3], f[4], std::stoull(f[5]), f[6]});
        entries_[f[1]] = e;
        reload_blob(f[3], f[4], f[6]);
      } else if (f[0] == "REPL" && f.size() == 7) {
        entries_[f[1]].replicas.push_back({f[2], f[3], f[4], std::stoull(f[5]), f[6]});
        reload_blob(f[3], f[4], f[6]);
      } else if (f[0] == "DEL" && f.size() == 2) {
        entries_.erase(f[1]);
      } else {
        fail(Errc::MalformedConfig, "bad catalog log line: " + line);
      }
    }
    std::ifstream dbin(dblog_path(), std::ios::binary);
    while (dbin && std::getline(dbin, line)) {
      if (line.empty()) continue;
      auto f = split(line, '\t');
      if (f[0] == "IMG" && f.size() == 7) {
        local_db_.insert_image({f[1], f[2], f[3], f[4], f[5], f[6]});
      } else if (f[0] == "PAT" && f.size() == 4) {
        model::PatientRecord r;
        r.pseudonym = f[1];
        r.site_of_origin = f[2];
        for (std::size_t i = 0; i + 1 < f[3].size(); i += 2)
          r.personal_fields_sealed.push_back(
              std::uint8_t(std::stoi(f[3].substr(i, 2), nullptr, 16)));
        local_db_.insert_patient(r);
      } else {
        fail(Errc::MalformedConfig, "bad localdb log line: " + line);
      }
    }
  }

  void reload_blob(const std::string& site, const std::string& ppath,
                   const std::string& content_hash) {
    if (site != site_) return;
    std::ifstream blob(blob_path(content_hash), std::ios::binary);
    if (!blob) return;
    Bytes content((std::istreambuf_iterator<char>(blob)),
                  std::istreambuf_iterator<char>());
    storage_.put(ppath, std::move(content));
  }

  std::string site_;
  std::string data_dir_;
  StorageElement storage_;
  LocalDb local_db_;
  std::map<std::string, CatalogEntry> entries_;
  std::vector<std::string> write_audit_;
  std::ofstream log_;
  std::ofstream dblog_;
};

}  // namespace hospigrid::catalog
