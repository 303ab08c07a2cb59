#include "sclab/cache.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "sclab/errors.hpp"

namespace sclab {

namespace {

constexpr char kMagic[] = "SCLAB1";
constexpr std::size_t kMagicLen = 6;

void put_u32(std::string& buf, uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char((v >> 24) & 0xff)};
  buf.append(b, 4);
}

void put_f32(std::string& buf, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(buf, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("activation cache: " + what + " at byte offset " + std::to_string(pos));
  }

  uint8_t u8() {
    if (pos + 1 > buf.size()) fail("truncated payload (expected byte)");
    return uint8_t(buf[pos++]);
  }

  uint32_t u32() {
    if (pos + 4 > buf.size()) fail("truncated payload (expected u32)");
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | uint8_t(buf[pos + std::size_t(i)]);
    pos += 4;
    return v;
  }

  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

}  // namespace

void save_activation_cache(const std::string& path,
                           const std::vector<ActivationRecord>& records,
                           int feature_dim) {
  std::string buf(kMagic, kMagicLen);
  nlohmann::json header = {{"record_count", records.size()},
                           {"feature_dim", feature_dim},
                           {"has_modality", true}};
  buf += header.dump();
  buf += '\n';
  for (const auto& rec : records) {
    buf += char(uint8_t(rec.modality));
    put_u32(buf, uint32_t(rec.entries.size()));
    for (const auto& [idx, val] : rec.entries) {
      if (idx < 0 || idx >= feature_dim) {
        throw DomainError("save_activation_cache: feature index out of range");
      }
      put_u32(buf, uint32_t(idx));
      put_f32(buf, val);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_activation_cache: cannot open " + path);
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw IoError("save_activation_cache: write failed for " + path);
}

std::vector<ActivationRecord> load_activation_cache(const std::string& path, int* feature_dim_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_activation_cache: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader r{buf};
  if (buf.size() < kMagicLen || std::memcmp(buf.data(), kMagic, kMagicLen) != 0) {
    r.fail("bad magic (expected SCLAB1)");
  }
  r.pos = kMagicLen;
  const std::size_t nl = buf.find('\n', r.pos);
  if (nl == std::string::npos) r.fail("missing header terminator");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.substr(r.pos, nl - r.pos));
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("malformed JSON header: ") + e.what());
  }
  if (!header.contains("record_count") || !header.contains("feature_dim")) {
    r.fail("header missing record_count/feature_dim");
  }
  const uint64_t record_count = header["record_count"].get<uint64_t>();
  const int feature_dim = header["feature_dim"].get<int>();
  const bool has_modality = header.value("has_modality", true);
  if (feature_dim < 0) r.fail("negative feature_dim");
  r.pos = nl + 1;

  std::vector<ActivationRecord> records;
  records.reserve(record_count);
  for (uint64_t i = 0; i < record_count; ++i) {
    ActivationRecord rec;
    if (has_modality) {
      const uint8_t m = r.u8();
      if (m > 1) r.fail("invalid modality byte");
      rec.modality = Modality(m);
    }
    const uint32_t k = r.u32();
    rec.entries.reserve(k);
    for (uint32_t j = 0; j < k; ++j) {
      const uint32_t idx = r.u32();
      const std::size_t value_pos = r.pos;
      const float val = r.f32();
      if (int(idx) >= feature_dim) r.fail("feature index " + std::to_string(idx) + " >= feature_dim");
      if (!std::isfinite(val)) {
        r.pos = value_pos;
        r.fail("non-finite activation value");
      }
      rec.entries.emplace_back(int(idx), val);
    }
    records.push_back(std::move(rec));
  }
  if (r.pos != buf.size()) r.fail("trailing bytes after last record");
  if (feature_dim_out) *feature_dim_out = feature_dim;
  return records;
}

std::vector<ActivationRecord> records_from_dense(const Matrix& acts, Modality modality, float tau) {
  std::vector<ActivationRecord> records(std::size_t(acts.rows));
  for (int i = 0; i < acts.rows; ++i) {
    records[std::size_t(i)].modality = modality;
    for (int j = 0; j < acts.cols; ++j) {
      const float v = acts(i, j);
      if (v > tau) records[std::size_t(i)].entries.emplace_back(j, v);
    }
  }
  return records;
}

}  // namespace sclab
