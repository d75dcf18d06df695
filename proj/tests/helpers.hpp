#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "hospigrid/hospigrid.hpp"

namespace testutil {

using namespace hospigrid;

// ---- fixture data ------------------------------------------------------------

inline Bytes make_dcml(const std::string& patient_name, const std::string& patient_id,
                       const std::string& study_date, const std::string& modality,
                       const std::string& image_id, const Bytes& pixels = {}) {
  std::string head = "DCML1\n";
  head += "PatientName=" + patient_name + "\n";
  head += "PatientID=" + patient_id + "\n";
  head += "StudyDate=" + study_date + "\n";
  head += "Modality=" + modality + "\n";
  head += "ImageID=" + image_id + "\n";
  head += "PIXELS " + std::to_string(pixels.size()) + "\n";
  Bytes out(head.begin(), head.end());
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

inline Bytes pseudo_pixels(std::uint64_t seed, std::size_t n) {
  Bytes out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::uint8_t(mix64(seed, i));
  return out;
}

// Full mesh of identical links between the named sites.
inline std::string mesh_links(const std::vector<std::string>& sites,
                              const std::string& spec = "1048576 0.01 0.05") {
  std::string out;
  for (const auto& a : sites)
    for (const auto& b : sites)
      if (a != b) out += "LINK " + a + " " + b + " " + spec + "\n";
  return out;
}

inline std::string p15_topology_text(int base_port = 0) {
  std::vector<std::string> sites{"cambridge", "oxford", "udine"};
  std::string out = "MODE P1_5\n";
  int port = base_port;
  for (const auto& s : sites)
    out += "SITE " + s + " 127.0.0.1:" + std::to_string(base_port ? port++ : 0) + "\n";
  return out + mesh_links(sites);
}

inline std::string p1_topology_text(int base_port = 0) {
  std::vector<std::string> sites{"cern", "cambridge", "oxford", "udine"};
  std::string out = "MODE P1\nCENTRAL cern\n";
  int port = base_port;
  for (const auto& s : sites)
    out += "SITE " + s + " 127.0.0.1:" + std::to_string(base_port ? port++ : 0) + "\n";
  return out + mesh_links(sites);
}

inline std::string p2_topology_text(int base_port = 0) {
  std::vector<std::string> sites{"cambridge", "oxford", "udine", "cern"};
  std::string out = "MODE P2\n";
  int port = base_port;
  for (const auto& s : sites)
    out += "SITE " + s + " 127.0.0.1:" + std::to_string(base_port ? port++ : 0) + "\n";
  out += "VO uk parent=eu cambridge oxford\n";
  out += "VO italy parent=eu udine\n";
  out += "VO eu cern\n";
  return out + mesh_links(sites);
}

inline Grid::Options inproc_options(std::uint64_t seed = 7) {
  Grid::Options o;
  o.seed = seed;
  o.backend = Backend::inproc;
  return o;
}

inline federation::Rights all_rights() {
  using federation::Right;
  return {Right::read, Right::query_local, Right::query_global, Right::replicate,
          Right::execute, Right::admin};
}

// ---- independent reference generator (jobs oracle) ----------------------------
// A second, test-local transcription of the pinned placement mixer.

inline std::uint64_t reference_mix(std::uint64_t seed, std::uint64_t ordinal) {
  std::uint64_t z = seed + (ordinal + 1) * 0x9e3779b97f4a7c15ULL;
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// ---- brute-force query oracle ---------------------------------------------------
// Direct evaluation over raw rows: cross product of joined tables, predicate
// applied per joined row, no SQL translation involved.

struct OracleDb {
  // table -> rows (column order = default schema order)
  std::map<std::string, std::vector<std::vector<std::string>>> tables;

  void add(const std::string& table, std::vector<std::string> row) {
    tables[table].push_back(std::move(row));
  }
};

inline bool oracle_eval(const query::Pred& p,
                        const std::map<std::string, std::string>& env) {
  if (p.kind == query::Pred::Kind::Atom)
    return query::compare(env.at(p.column), p.op, p.literal);
  bool l = oracle_eval(*p.left, env);
  bool r = oracle_eval(*p.right, env);
  return p.kind == query::Pred::Kind::And ? (l && r) : (l || r);
}

inline std::multiset<std::vector<std::string>> oracle_execute(const query::QueryDoc& doc,
                                                              const OracleDb& db) {
  const auto& schema = catalog::default_schema();
  using Env = std::map<std::string, std::string>;

  std::vector<Env> envs;
  auto it = db.tables.find(doc.from);
  const std::vector<std::vector<std::string>> empty;
  for (const auto& row : it == db.tables.end() ? empty : it->second) {
    Env env;
    const auto& cols = schema.columns(doc.from);
    for (std::size_t i = 0; i < cols.size(); ++i) env[cols[i]] = row[i];
    envs.push_back(std::move(env));
  }
  for (const auto& j : doc.joins) {
    std::vector<Env> next;
    auto jt = db.tables.find(j.table);
    const auto& jcols = schema.columns(j.table);
    for (const auto& env : envs) {
      for (const auto& row : jt == db.tables.end() ? empty : jt->second) {
        std::size_t rc = 0;
        for (std::size_t i = 0; i < jcols.size(); ++i)
          if (jcols[i] == j.right_column) rc = i;
        if (row[rc] != env.at(j.left_column)) continue;
        Env merged = env;
        for (std::size_t i = 0; i < jcols.size(); ++i)
          if (!merged.count(jcols[i])) merged[jcols[i]] = row[i];
        next.push_back(std::move(merged));
      }
    }
    envs = std::move(next);
  }

  std::multiset<std::vector<std::string>> out;
  for (const auto& env : envs) {
    if (doc.predicate && !oracle_eval(*doc.predicate, env)) continue;
    std::vector<std::string> row;
    for (const auto& c : doc.select) row.push_back(env.at(c));
    out.insert(std::move(row));
  }
  return out;
}

inline std::set<std::vector<std::string>> row_set(
    const std::vector<std::vector<std::string>>& rows) {
  return {rows.begin(), rows.end()};
}

template <typename Rows>
inline std::set<std::vector<std::string>> as_set(const Rows& rows) {
  return {rows.begin(), rows.end()};
}

// ---- seeded dataset / query generators --------------------------------------------

struct GeneratedDataset {
  // per site: list of dcml file bytes
  std::map<std::string, std::vector<Bytes>> files;
};

inline GeneratedDataset generate_dataset(std::uint64_t seed,
                                         const std::vector<std::string>& sites,
                                         std::size_t files_per_site) {
  static const char* modalities[] = {"MG", "CR", "US", "MR"};
  GeneratedDataset ds;
  std::uint64_t n = 0;
  for (const auto& site : sites) {
    for (std::size_t i = 0; i < files_per_site; ++i) {
      std::uint64_t r = mix64(seed, n);
      std::string id = "P" + std::to_string(r % 97);
      std::string name = "Surname-" + std::to_string(r % 97);
      std::uint64_t month = 1 + (r >> 8) % 9;
      std::uint64_t day = 1 + (r >> 16) % 28;
      std::string date = "2004-0" + std::to_string(month) + "-" +
                         (day < 10 ? "0" : "") + std::to_string(day);
      std::string modality = modalities[(r >> 24) % 4];
      std::string image_id = "img-" + site + "-" + std::to_string(n);
      ds.files[site].push_back(make_dcml(name, id, date, modality, image_id,
                                         pseudo_pixels(r, (r >> 32) % 64)));
      ++n;
    }
  }
  return ds;
}

// Random query over the test schema: simple single-table filters, AND/OR
// combinations, and an occasional images-patients join.
inline query::QueryDoc generate_query(std::uint64_t seed, query::Scope scope) {
  static const char* modalities[] = {"MG", "CR", "US", "MR"};
  std::uint64_t r = mix64(seed, 12345);
  query::QueryDoc doc;
  doc.scope = scope;
  doc.from = "images";
  doc.select = catalog::default_schema().columns("images");

  auto atom_for = [&](std::uint64_t rr) {
    switch (rr % 4) {
      case 0:
        return query::Pred::atom("modality", query::CmpOp::Eq, modalities[(rr >> 4) % 4]);
      case 1: {
        std::uint64_t month = 1 + (rr >> 4) % 9;
        return query::Pred::atom("study_date",
                                 (rr >> 8) % 2 ? query::CmpOp::Ge : query::CmpOp::Lt,
                                 "2004-0" + std::to_string(month) + "-15");
      }
      case 2:
        return query::Pred::atom("image_id", query::CmpOp::Contains,
                                 "-" + std::to_string((rr >> 4) % 10));
      default:
        return query::Pred::atom("modality", query::CmpOp::Ne, modalities[(rr >> 4) % 4]);
    }
  };

  switch (r % 4) {
    case 0:
      doc.predicate = atom_for(r >> 2);
      break;
    case 1:
      doc.predicate = query::Pred::combine(query::Pred::Kind::And, atom_for(r >> 2),
                                           atom_for(r >> 20));
      break;
    case 2:
      doc.predicate = query::Pred::combine(query::Pred::Kind::Or, atom_for(r >> 2),
                                           atom_for(r >> 20));
      break;
    default:
      doc.joins.push_back({"patients", "patient_pseudonym", "pseudonym"});
      doc.predicate = query::Pred::combine(query::Pred::Kind::And, atom_for(r >> 2),
                                           atom_for(r >> 20));
      break;
  }
  return doc;
}

}  // namespace testutil
