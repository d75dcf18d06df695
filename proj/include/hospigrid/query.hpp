#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hospigrid/catalog.hpp"
#include "hospigrid/common.hpp"

namespace hospigrid::query {

enum class Scope { Local, Global };

inline const char* scope_name(Scope s) { return s == Scope::Local ? "Local" : "Global"; }

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge, Contains };

inline const char* op_symbol(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Contains: return "CONTAINS";
  }
  return "?";
}

inline std::optional<CmpOp> parse_op(const std::string& s) {
  if (s == "=") return CmpOp::Eq;
  if (s == "!=") return CmpOp::Ne;
  if (s == "<") return CmpOp::Lt;
  if (s == "<=") return CmpOp::Le;
  if (s == ">") return CmpOp::Gt;
  if (s == ">=") return CmpOp::Ge;
  if (s == "CONTAINS") return CmpOp::Contains;
  return std::nullopt;
}

// Values are text; dates are ISO strings so byte comparison orders them.
inline bool compare(const std::string& lhs, CmpOp op, const std::string& rhs) {
  switch (op) {
    case CmpOp::Eq: return lhs == rhs;
    case CmpOp::Ne: return lhs != rhs;
    case CmpOp::Lt: return lhs < rhs;
    case CmpOp::Le: return lhs <= rhs;
    case CmpOp::Gt: return lhs > rhs;
    case CmpOp::Ge: return lhs >= rhs;
    case CmpOp::Contains: return lhs.find(rhs) != std::string::npos;
  }
  return false;
}

// Boolean predicate tree: atoms combined with binary AND/OR.
struct Pred {
  enum class Kind { Atom, And, Or };
  Kind kind = Kind::Atom;
  std::string column;
  CmpOp op = CmpOp::Eq;
  std::string literal;
  std::unique_ptr<Pred> left, right;

  static std::unique_ptr<Pred> atom(std::string col, CmpOp op, std::string lit) {
    auto p = std::make_unique<Pred>();
    p->kind = Kind::Atom;
    p->column = std::move(col);
    p->op = op;
    p->literal = std::move(lit);
    return p;
  }
  static std::unique_ptr<Pred> combine(Kind k, std::unique_ptr<Pred> l,
                                       std::unique_ptr<Pred> r) {
    auto p = std::make_unique<Pred>();
    p->kind = k;
    p->left = std::move(l);
    p->right = std::move(r);
    return p;
  }

  std::unique_ptr<Pred> clone() const {
    if (kind == Kind::Atom) return atom(column, op, literal);
    return combine(kind, left->clone(), right->clone());
  }

  int depth() const {
    if (kind == Kind::Atom) return 1;
    return 1 + std::max(left->depth(), right->depth());
  }
};

struct Join {
  std::string table;
  std::string left_column;   // resolved against tables joined so far
  std::string right_column;  // column of the joined table
};

struct QueryDoc {
  Scope scope = Scope::Local;
  std::vector<std::string> select;
  std::string from;
  std::vector<Join> joins;
  std::unique_ptr<Pred> predicate;  // null = no filter

  QueryDoc() = default;
  QueryDoc(const QueryDoc& o)
      : scope(o.scope), select(o.select), from(o.from), joins(o.joins),
        predicate(o.predicate ? o.predicate->clone() : nullptr) {}
  QueryDoc& operator=(const QueryDoc& o) {
    scope = o.scope; select = o.select; from = o.from; joins = o.joins;
    predicate = o.predicate ? o.predicate->clone() : nullptr;
    return *this;
  }
  QueryDoc(QueryDoc&&) = default;
  QueryDoc& operator=(QueryDoc&&) = default;
};

inline constexpr int kMaxPredicateDepth = 16;

// ---- validation against the metadata_db schema -------------------------------

inline void validate_query(const QueryDoc& doc, const catalog::Schema& schema) {
  if (!schema.has_table(doc.from)) fail(Errc::UnknownTable, doc.from);
  std::vector<std::string> tables{doc.from};
  for (const auto& j : doc.joins) {
    if (!schema.has_table(j.table)) fail(Errc::UnknownTable, j.table);
    bool left_ok = false;
    for (const auto& t : tables)
      if (schema.has_column(t, j.left_column)) left_ok = true;
    if (!left_ok) fail(Errc::UnknownColumn, j.left_column);
    if (!schema.has_column(j.table, j.right_column))
      fail(Errc::UnknownColumn, j.right_column);
    tables.push_back(j.table);
  }
  auto column_known = [&](const std::string& c) {
    for (const auto& t : tables)
      if (schema.has_column(t, c)) return true;
    return false;
  };
  if (doc.select.empty()) fail(Errc::BadQueryDoc, "empty select list");
  for (const auto& c : doc.select)
    if (!column_known(c)) fail(Errc::UnknownColumn, c);
  if (doc.predicate) {
    if (doc.predicate->depth() > kMaxPredicateDepth)
      fail(Errc::DepthExceeded, std::to_string(doc.predicate->depth()));
    std::function<void(const Pred&)> walk = [&](const Pred& p) {
      if (p.kind == Pred::Kind::Atom) {
        if (!column_known(p.column)) fail(Errc::UnknownColumn, p.column);
      } else {
        walk(*p.left);
        walk(*p.right);
      }
    };
    walk(*doc.predicate);
  }
}

// ---- QueryTranslator: client document -> SQL plan -----------------------------

struct SqlPlan {
  std::string statement;                // single SELECT, fully parenthesized WHERE
  std::vector<std::string> parameters;  // depth-first atom literals
};

inline SqlPlan translate_query(const QueryDoc& doc, const catalog::Schema& schema) {
  validate_query(doc, schema);
  SqlPlan plan;
  plan.statement = "SELECT " + join(doc.select, ", ") + " FROM " + doc.from;
  for (const auto& j : doc.joins)
    plan.statement += " JOIN " + j.table + " ON " + j.left_column + " = " + j.right_column;
  if (doc.predicate) {
    std::function<std::string(const Pred&)> render = [&](const Pred& p) -> std::string {
      if (p.kind == Pred::Kind::Atom) {
        plan.parameters.push_back(p.literal);
        return p.column + " " + op_symbol(p.op) + " ?";
      }
      const char* word = p.kind == Pred::Kind::And ? " AND " : " OR ";
      std::string lhs = render(*p.left);  // sequence: parameters are depth-first
      std::string rhs = render(*p.right);
      return "(" + lhs + word + rhs + ")";
    };
    plan.statement += " WHERE " + render(*doc.predicate);
  }
  return plan;
}

// ---- plan parsing (executor side) ---------------------------------------------
// The evaluator accepts exactly the grammar translate_query emits.

namespace detail {

inline std::vector<std::string> sql_tokens(const std::string& s) {
  std::string padded;
  for (char c : s) {
    if (c == '(' || c == ')') {
      padded += ' ';
      padded += c;
      padded += ' ';
    } else if (c == ',') {
      padded += " , ";
    } else {
      padded += c;
    }
  }
  return split_ws(padded);
}

struct PlanParser {
  const std::vector<std::string>& toks;
  const std::vector<std::string>& params;
  std::size_t pos = 0;
  std::size_t next_param = 0;

  const std::string& peek() {
    static const std::string empty;
    return pos < toks.size() ? toks[pos] : empty;
  }
  std::string take() {
    if (pos >= toks.size()) fail(Errc::SchemaMismatch, "truncated statement");
    return toks[pos++];
  }
  void expect(const std::string& t) {
    if (take() != t) fail(Errc::SchemaMismatch, "expected " + t);
  }

  std::unique_ptr<Pred> parse_expr() {
    if (peek() == "(") {
      take();
      auto l = parse_expr();
      std::string word = take();
      Pred::Kind k;
      if (word == "AND") k = Pred::Kind::And;
      else if (word == "OR") k = Pred::Kind::Or;
      else fail(Errc::SchemaMismatch, "expected AND/OR, got " + word);
      auto r = parse_expr();
      expect(")");
      return Pred::combine(k, std::move(l), std::move(r));
    }
    std::string col = take();
    auto op = parse_op(take());
    if (!op) fail(Errc::SchemaMismatch, "bad operator");
    expect("?");
    if (next_param >= params.size()) fail(Errc::SchemaMismatch, "missing parameter");
    return Pred::atom(col, *op, params[next_param++]);
  }
};

}  // namespace detail

// Structured form recovered from a SqlPlan; scope is not part of the SQL text.
inline QueryDoc parse_plan(const SqlPlan& plan) {
  auto toks = detail::sql_tokens(plan.statement);
  detail::PlanParser p{toks, plan.parameters};
  QueryDoc doc;
  p.expect("SELECT");
  while (true) {
    doc.select.push_back(p.take());
    if (p.peek() == ",") { p.take(); continue; }
    break;
  }
  p.expect("FROM");
  doc.from = p.take();
  while (p.peek() == "JOIN") {
    p.take();
    Join j;
    j.table = p.take();
    p.expect("ON");
    j.left_column = p.take();
    p.expect("=");
    j.right_column = p.take();
    doc.joins.push_back(j);
  }
  if (p.peek() == "WHERE") {
    p.take();
    doc.predicate = p.parse_expr();
  }
  if (p.pos != toks.size()) fail(Errc::SchemaMismatch, "trailing tokens");
  if (p.next_param != plan.parameters.size())
    fail(Errc::SchemaMismatch, "unused parameters");
  return doc;
}

// ---- local execution (Local Query Handler) -------------------------------------

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::string origin_site;

  friend bool operator==(const ResultSet&, const ResultSet&) = default;
};

namespace detail {

// One joined row: column -> value, earlier tables win on name clashes.
using Env = std::vector<std::pair<std::string, std::string>>;

inline const std::string* env_get(const Env& env, const std::string& col) {
  for (const auto& [k, v] : env)
    if (k == col) return &v;
  return nullptr;
}

inline bool eval_pred(const Pred& p, const Env& env) {
  if (p.kind == Pred::Kind::Atom) {
    const std::string* v = env_get(env, p.column);
    if (!v) fail(Errc::SchemaMismatch, p.column);
    return compare(*v, p.op, p.literal);
  }
  bool l = eval_pred(*p.left, env);
  bool r = eval_pred(*p.right, env);
  return p.kind == Pred::Kind::And ? (l && r) : (l || r);
}

inline std::vector<std::vector<std::string>> sorted_rows(const catalog::LocalDb& db,
                                                         const std::string& table) {
  auto rows = db.rows(table);
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });
  return rows;
}

}  // namespace detail

inline ResultSet execute_local(const SqlPlan& plan, const catalog::LocalDb& db,
                               const std::string& site_name) {
  QueryDoc doc = parse_plan(plan);
  validate_query(doc, db.schema());

  // driving rows in ascending primary key order, then nested-loop joins
  std::vector<detail::Env> envs;
  for (const auto& row : detail::sorted_rows(db, doc.from)) {
    detail::Env env;
    const auto& cols = db.schema().columns(doc.from);
    for (std::size_t i = 0; i < cols.size(); ++i) env.emplace_back(cols[i], row[i]);
    envs.push_back(std::move(env));
  }
  for (const auto& j : doc.joins) {
    auto jrows = detail::sorted_rows(db, j.table);
    const auto& jcols = db.schema().columns(j.table);
    std::vector<detail::Env> next;
    for (const auto& env : envs) {
      const std::string* lv = detail::env_get(env, j.left_column);
      if (!lv) fail(Errc::SchemaMismatch, j.left_column);
      for (const auto& jr : jrows) {
        std::size_t rc = 0;
        for (std::size_t i = 0; i < jcols.size(); ++i)
          if (jcols[i] == j.right_column) rc = i;
        if (jr[rc] != *lv) continue;
        detail::Env merged = env;
        for (std::size_t i = 0; i < jcols.size(); ++i)
          merged.emplace_back(jcols[i], jr[i]);
        next.push_back(std::move(merged));
      }
    }
    envs = std::move(next);
  }

  ResultSet rs;
  rs.columns = doc.select;
  rs.origin_site = site_name;
  for (const auto& env : envs) {
    if (doc.predicate && !detail::eval_pred(*doc.predicate, env)) continue;
    std::vector<std::string> out;
    for (const auto& c : doc.select) {
      const std::string* v = detail::env_get(env, c);
      if (!v) fail(Errc::SchemaMismatch, c);
      out.push_back(*v);
    }
    rs.rows.push_back(std::move(out));
  }
  return rs;
}

// ---- merge (global query barrier) -----------------------------------------------

struct MergedResult {
  ResultSet result;
  std::uint64_t dedup_count = 0;
};

// Concatenates per-site results, eliminating rows that are the same record
// seen at several replicas. Dedup key is the lfn column when present
// (replicated images), full-row equality otherwise.
inline MergedResult merge_results(const std::vector<ResultSet>& parts) {
  MergedResult out;
  if (parts.empty()) return out;
  out.result.columns = parts[0].columns;
  out.result.origin_site = parts[0].origin_site;

  std::optional<std::size_t> key_col;
  for (std::size_t i = 0; i < parts[0].columns.size(); ++i)
    if (parts[0].columns[i] == "lfn") key_col = i;

  std::set<std::string> seen;
  for (const auto& part : parts) {
    if (part.columns != out.result.columns) fail(Errc::ColumnMismatch, part.origin_site);
    for (const auto& row : part.rows) {
      std::string key = key_col ? row[*key_col] : join(row, "\x1f");
      if (!seen.insert(key).second) {
        ++out.dedup_count;
        continue;
      }
      out.result.rows.push_back(row);
    }
  }
  std::stable_sort(out.result.rows.begin(), out.result.rows.end(),
                   [](const auto& a, const auto& b) { return a[0] < b[0]; });
  return out;
}

// ---- wire formats ---------------------------------------------------------------

namespace detail {

inline std::string escape_field(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\\') out += "\\\\";
    else if (c == '\t') out += "\\t";
    else if (c == '\n') out += "\\n";
    else out.push_back(c);
  }
  return out;
}

inline std::string unescape_field(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') { out.push_back(s[i]); continue; }
    if (++i >= s.size()) fail(Errc::MalformedConfig, "dangling escape");
    if (s[i] == '\\') out.push_back('\\');
    else if (s[i] == 't') out.push_back('\t');
    else if (s[i] == 'n') out.push_back('\n');
    else fail(Errc::MalformedConfig, "bad escape");
  }
  return out;
}

}  // namespace detail

// Serialized query answer plus fan-out provenance.
struct ResultDoc {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::uint64_t dedup_count = 0;
  std::vector<std::string> contributing_sites;

  friend bool operator==(const ResultDoc&, const ResultDoc&) = default;
};

inline ResultDoc translate_results(const ResultSet& rs, std::uint64_t dedup_count = 0,
                                   std::vector<std::string> contributing_sites = {}) {
  ResultDoc doc;
  doc.columns = rs.columns;
  doc.rows = rs.rows;
  doc.dedup_count = dedup_count;
  doc.contributing_sites = std::move(contributing_sites);
  if (doc.contributing_sites.empty() && !rs.origin_site.empty())
    doc.contributing_sites.push_back(rs.origin_site);
  return doc;
}

inline std::string serialize_result_doc(const ResultDoc& doc) {
  std::string out = "RES " + std::to_string(doc.columns.size()) + " " +
                    std::to_string(doc.rows.size()) + " " +
                    std::to_string(doc.dedup_count) + "\n";
  std::vector<std::string> hdr;
  for (const auto& c : doc.columns) hdr.push_back(detail::escape_field(c));
  out += join(hdr, "\t") + "\n";
  for (const auto& row : doc.rows) {
    std::vector<std::string> fields;
    for (const auto& v : row) fields.push_back(detail::escape_field(v));
    out += join(fields, "\t") + "\n";
  }
  out += "END\n";
  return out;
}

inline ResultDoc parse_result_doc(const std::string& text) {
  auto lines = split(text, '\n');
  if (lines.size() < 3 || !starts_with(lines[0], "RES "))
    fail(Errc::MalformedConfig, "bad result document");
  auto head = split_ws(lines[0]);
  if (head.size() != 4) fail(Errc::MalformedConfig, lines[0]);
  ResultDoc doc;
  std::size_t ncols = std::stoull(head[1]);
  std::size_t nrows = std::stoull(head[2]);
  doc.dedup_count = std::stoull(head[3]);
  for (const auto& c : split(lines[1], '\t')) doc.columns.push_back(detail::unescape_field(c));
  if (doc.columns.size() != ncols) fail(Errc::MalformedConfig, "column count mismatch");
  for (std::size_t i = 0; i < nrows; ++i) {
    if (2 + i >= lines.size()) fail(Errc::MalformedConfig, "truncated rows");
    std::vector<std::string> row;
    for (const auto& v : split(lines[2 + i], '\t')) row.push_back(detail::unescape_field(v));
    if (row.size() != ncols) fail(Errc::MalformedConfig, "row arity mismatch");
    doc.rows.push_back(std::move(row));
  }
  if (2 + nrows >= lines.size() || lines[2 + nrows] != "END")
    fail(Errc::MalformedConfig, "missing END");
  return doc;
}

// ---- QueryDoc wire form -----------------------------------------------------------

inline std::string serialize_query_doc(const QueryDoc& doc) {
  std::string out = std::string("QRY ") + scope_name(doc.scope) + " " + doc.from + "\n";
  out += "SEL " + join(doc.select, ",") + "\n";
  for (const auto& j : doc.joins)
    out += "JOIN " + j.table + " " + j.left_column + " " + j.right_column + "\n";
  if (doc.predicate) {
    std::function<void(const Pred&)> emit = [&](const Pred& p) {
      if (p.kind == Pred::Kind::Atom) {
        out += "ATOM " + p.column + " " + op_symbol(p.op) + " " + p.literal + "\n";
      } else {
        out += p.kind == Pred::Kind::And ? "AND\n" : "OR\n";
        emit(*p.left);
        emit(*p.right);
      }
    };
    emit(*doc.predicate);
  }
  out += "END\n";
  return out;
}

namespace detail {

inline std::unique_ptr<Pred> parse_pred_lines(const std::vector<std::string>& lines,
                                              std::size_t& i) {
  if (i >= lines.size()) fail(Errc::BadQueryDoc, "truncated predicate");
  const std::string& line = lines[i++];
  if (line == "AND" || line == "OR") {
    auto l = parse_pred_lines(lines, i);
    auto r = parse_pred_lines(lines, i);
    return Pred::combine(line == "AND" ? Pred::Kind::And : Pred::Kind::Or,
                         std::move(l), std::move(r));
  }
  if (!starts_with(line, "ATOM ")) fail(Errc::BadQueryDoc, line);
  std::string rest = line.substr(5);
  std::size_t sp1 = rest.find(' ');
  if (sp1 == std::string::npos) fail(Errc::BadQueryDoc, line);
  std::size_t sp2 = rest.find(' ', sp1 + 1);
  if (sp2 == std::string::npos) fail(Errc::BadQueryDoc, line);
  auto op = parse_op(rest.substr(sp1 + 1, sp2 - sp1 - 1));
  if (!op) fail(Errc::BadQueryDoc, line);
  return Pred::atom(rest.substr(0, sp1), *op, rest.substr(sp2 + 1));
}

}  // namespace detail

inline QueryDoc parse_query_doc(const std::string& text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() < 3) fail(Errc::BadQueryDoc, "too short");

  QueryDoc doc;
  auto head = split_ws(lines[0]);
  if (head.size() != 3 || head[0] != "QRY") fail(Errc::BadQueryDoc, lines[0]);
  if (head[1] == "Local") doc.scope = Scope::Local;
  else if (head[1] == "Global") doc.scope = Scope::Global;
  else fail(Errc::BadQueryDoc, head[1]);
  doc.from = head[2];

  if (!starts_with(lines[1], "SEL ")) fail(Errc::BadQueryDoc, lines[1]);
  doc.select = split(lines[1].substr(4), ',');

  std::size_t i = 2;
  while (i < lines.size() && starts_with(lines[i], "JOIN ")) {
    auto f = split_ws(lines[i]);
    if (f.size() != 4) fail(Errc::BadQueryDoc, lines[i]);
    doc.joins.push_back({f[1], f[2], f[3]});
    ++i;
  }
  if (i < lines.size() && lines[i] != "END") doc.predicate = detail::parse_pred_lines(lines, i);
  if (i >= lines.size() || lines[i] != "END") fail(Errc::BadQueryDoc, "missing END");
  if (i + 1 != lines.size()) fail(Errc::BadQueryDoc, "trailing content");
  return doc;
}

}  // namespace hospigrid::query
