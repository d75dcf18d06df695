#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hospigrid/common.hpp"

namespace hospigrid::model {

struct SiteId {
  std::string name;
  std::string address;  // transport endpoint, "host:port" for the socket backend

  friend bool operator==(const SiteId& a, const SiteId& b) { return a.name == b.name; }
  friend bool operator<(const SiteId& a, const SiteId& b) { return a.name < b.name; }
};

inline const char* kRequiredTags[] = {"PatientName", "PatientID", "StudyDate",
                                      "Modality", "ImageID"};

// Simplified image container: ASCII magic "DCML1\n", then "tag=value\n"
// lines, then "PIXELS <len>\n" followed by exactly <len> raw bytes.
struct DicomLiteFile {
  std::vector<std::pair<std::string, std::string>> tags;  // serialization order
  Bytes pixel_data;

  std::optional<std::string> tag(const std::string& name) const {
    for (const auto& [k, v] : tags)
      if (k == name) return v;
    return std::nullopt;
  }

  std::string required_tag(const std::string& name) const {
    auto v = tag(name);
    if (!v) fail(Errc::MissingRequiredTag, name);
    return *v;
  }

  void set_tag(const std::string& name, const std::string& value) {
    for (auto& [k, v] : tags)
      if (k == name) { v = value; return; }
    tags.emplace_back(name, value);
  }

  Bytes serialize() const {
    std::string head = "DCML1\n";
    for (const auto& [k, v] : tags) head += k + "=" + v + "\n";
    head += "PIXELS " + std::to_string(pixel_data.size()) + "\n";
    Bytes out(head.begin(), head.end());
    out.insert(out.end(), pixel_data.begin(), pixel_data.end());
    return out;
  }

  std::size_t size_bytes() const {
    std::size_t n = 6;  // magic
    for (const auto& [k, v] : tags) n += k.size() + v.size() + 2;
    n += 7 + std::to_string(pixel_data.size()).size() + 1;
    return n + pixel_data.size();
  }
};

inline DicomLiteFile parse_dicom_lite(const Bytes& bytes) {
  auto malformed = [&](std::size_t offset, const std::string& what) {
    fail(Errc::MalformedContainer, what + " at offset " + std::to_string(offset));
  };

  const std::string magic = "DCML1\n";
  if (bytes.size() < magic.size() ||
      !std::equal(magic.begin(), magic.end(), bytes.begin()))
    malformed(0, "bad magic");

  DicomLiteFile file;
  std::size_t pos = magic.size();
  std::size_t pixel_len = 0;
  bool saw_pixels = false;
  while (pos < bytes.size()) {
    std::size_t eol = pos;
    while (eol < bytes.size() && bytes[eol] != '\n') ++eol;
    if (eol == bytes.size()) malformed(pos, "unterminated line");
    std::string line(bytes.begin() + pos, bytes.begin() + eol);

    if (starts_with(line, "PIXELS ")) {
      const std::string count = line.substr(7);
      if (count.empty() || count.find_first_not_of("0123456789") != std::string::npos)
        malformed(pos, "bad pixel count");
      pixel_len = std::stoull(count);
      pos = eol + 1;
      saw_pixels = true;
      break;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0) malformed(pos, "bad tag line");
    std::string name = line.substr(0, eq);
    if (file.tag(name)) malformed(pos, "duplicate tag " + name);
    file.tags.emplace_back(name, line.substr(eq + 1));
    pos = eol + 1;
  }
  if (!saw_pixels) malformed(pos, "missing PIXELS line");
  if (bytes.size() - pos != pixel_len) malformed(pos, "pixel length mismatch");
  file.pixel_data.assign(bytes.begin() + pos, bytes.end());

  for (const char* t : kRequiredTags)
    if (!file.tag(t)) fail(Errc::MissingRequiredTag, t);
  return file;
}

// ---- pseudonymization --------------------------------------------------
// Toy sealing scheme: keyed-hash pseudonym plus an XOR keystream derived
// from SHA-256. Deterministic and reversible with the site key; explicitly
// not cryptographically strong.

struct PatientRecord {
  std::string pseudonym;        // 16 hex chars, stable per (site, PatientID)
  Bytes personal_fields_sealed; // 16-byte nonce + ciphertext of "name\x1Fid"
  std::string site_of_origin;
};

inline std::string make_pseudonym(const std::string& site_name,
                                  const std::string& patient_id,
                                  const Bytes& site_key) {
  std::string material = to_string(site_key) + "\x1f" + site_name + "\x1f" + patient_id;
  auto d = sha256(material);
  return to_hex(d.data(), d.size()).substr(0, 16);
}

namespace detail {

inline Bytes keystream_xor(const Bytes& key, const Bytes& nonce, const Bytes& data) {
  Bytes out(data.size());
  for (std::size_t block = 0; block * 32 < data.size(); ++block) {
    std::string material = to_string(key) + to_string(nonce);
    for (int i = 3; i >= 0; --i) material.push_back(char(block >> (8 * i)));
    auto ks = sha256(material);
    for (std::size_t i = 0; i < 32 && block * 32 + i < data.size(); ++i)
      out[block * 32 + i] = data[block * 32 + i] ^ ks[i];
  }
  return out;
}

}  // namespace detail

inline Bytes seal_personal_fields(const std::string& name, const std::string& id,
                                  const std::string& site_name, const Bytes& site_key) {
  auto nd = sha256(site_name + "\x1f" + id);
  Bytes nonce(nd.begin(), nd.begin() + 16);
  Bytes plain = to_bytes(name + "\x1f" + id);
  Bytes sealed = nonce;
  Bytes ct = detail::keystream_xor(site_key, nonce, plain);
  sealed.insert(sealed.end(), ct.begin(), ct.end());
  return sealed;
}

inline std::pair<std::string, std::string> unseal_personal_fields(const Bytes& sealed,
                                                                  const Bytes& site_key) {
  if (sealed.size() < 16) fail(Errc::MalformedContainer, "sealed blob too short");
  Bytes nonce(sealed.begin(), sealed.begin() + 16);
  Bytes ct(sealed.begin() + 16, sealed.end());
  Bytes plain = detail::keystream_xor(site_key, nonce, ct);
  std::string s = to_string(plain);
  std::size_t sep = s.find('\x1f');
  if (sep == std::string::npos) fail(Errc::MalformedContainer, "sealed blob corrupt");
  return {s.substr(0, sep), s.substr(sep + 1)};
}

inline std::pair<DicomLiteFile, PatientRecord> pseudonymize(const DicomLiteFile& file,
                                                            const std::string& site_name,
                                                            const Bytes& site_key) {
  if (site_key.empty()) fail(Errc::MalformedConfig, "empty site key");
  std::string name = file.required_tag("PatientName");
  std::string id = file.required_tag("PatientID");

  std::string pseudonym = make_pseudonym(site_name, id, site_key);
  DicomLiteFile out = file;
  out.set_tag("PatientName", pseudonym);
  out.set_tag("PatientID", pseudonym);

  PatientRecord rec;
  rec.pseudonym = pseudonym;
  rec.personal_fields_sealed = seal_personal_fields(name, id, site_name, site_key);
  rec.site_of_origin = site_name;
  return {std::move(out), std::move(rec)};
}

// ---- metadata extraction ------------------------------------------------

struct ImageRecord {
  std::string image_id;
  std::string patient_pseudonym;
  std::string study_date;  // ISO "YYYY-MM-DD", compares lexicographically
  std::string modality;
  std::string lfn;
  std::string site_of_origin;
};

// The file must already be pseudonymized; PatientID holds the pseudonym.
inline ImageRecord extract_metadata(const DicomLiteFile& file, const std::string& lfn,
                                    const SiteId& site) {
  ImageRecord rec;
  rec.image_id = file.required_tag("ImageID");
  rec.patient_pseudonym = file.required_tag("PatientID");
  rec.study_date = file.required_tag("StudyDate");
  rec.modality = file.required_tag("Modality");
  rec.lfn = lfn;
  rec.site_of_origin = site.name;
  return rec;
}

}  // namespace hospigrid::model
