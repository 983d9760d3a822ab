#include "kfca/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

namespace kfca {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'K', 'F', 'C', 'A'};
constexpr std::size_t kHeaderSize = 4 + 1 + 3 * 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t x) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(x >> s));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t x = 0;
  for (int s = 0, i = 0; s < 32; s += 8, ++i) x |= static_cast<std::uint32_t>(b[at + i]) << s;
  return x;
}

}  // namespace

std::vector<std::uint8_t> serialize_reports(const ReportMatrix& reports) {
  if (reports.labels() > 256) throw Error(Errc::kInvalidArgument, "report bytes hold at most 256 labels");
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  out.push_back(kReportFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(reports.labels()));
  put_u32(out, static_cast<std::uint32_t>(reports.clients()));
  put_u32(out, static_cast<std::uint32_t>(reports.tasks()));
  out.reserve(out.size() + reports.data().size());
  for (Label x : reports.data()) out.push_back(static_cast<std::uint8_t>(x));
  return out;
}

ReportMatrix deserialize_reports(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(Errc::kIo, "not a binary report file");
  }
  if (bytes[4] != kReportFormatVersion) {
    throw Error(Errc::kIo, "unsupported report format version " + std::to_string(bytes[4]));
  }
  const std::size_t l = get_u32(bytes, 5);
  const std::size_t n = get_u32(bytes, 9);
  const std::size_t m = get_u32(bytes, 13);
  if (bytes.size() != kHeaderSize + n * m) throw Error(Errc::kIo, "report payload length does not match header");
  std::vector<std::vector<Label>> rows(n, std::vector<Label>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < m; ++k) rows[i][k] = bytes[kHeaderSize + i * m + k];
  return ReportMatrix(l, std::move(rows));
}

std::string reports_to_csv(const ReportMatrix& reports) {
  std::string out;
  for (std::size_t i = 0; i < reports.clients(); ++i) {
    const auto row = reports.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(row[k]);
    }
    out += '\n';
  }
  return out;
}

ReportMatrix reports_from_csv(std::string_view text, std::size_t labels) {
  std::vector<std::vector<Label>> rows;
  Label top = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<Label> row;
    while (true) {
      const auto comma = line.find(',');
      std::string_view field = line.substr(0, comma);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      Label v = 0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw Error(Errc::kIo, "line " + std::to_string(line_no) + ": bad label '" + std::string(field) + "'");
      }
      top = std::max(top, v);
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(Errc::kIo, "report file holds no rows");
  if (labels == 0) labels = std::max<std::size_t>(2, static_cast<std::size_t>(top) + 1);
  return ReportMatrix(labels, std::move(rows));
}

ReportMatrix read_reports(const std::filesystem::path& path, std::size_t labels) {
  const auto bytes = read_binary_file(path);
  if (bytes.size() >= kMagic.size() && std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    auto r = deserialize_reports(bytes);
    if (labels != 0 && labels != r.labels()) throw Error(Errc::kIo, "label count differs from the file header");
    return r;
  }
  return reports_from_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), labels);
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw Error(Errc::kIo, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

std::string commitment_digest(const ReportMatrix& reports, std::string_view salt) {
  auto bytes = serialize_reports(reports);
  bytes.insert(bytes.end(), salt.begin(), salt.end());
  return sha256_hex(bytes);
}

nlohmann::json delta_to_json(const DeltaMatrix& delta) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t a = 0; a < delta.size(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t b = 0; b < delta.size(); ++b) row.push_back(delta(a, b));
    rows.push_back(std::move(row));
  }
  nlohmann::json j;
  j["labels"] = delta.size();
  j["provenance"] = std::string(to_string(delta.provenance()));
  j["sample_count"] = delta.sample_count();
  if (delta.provenance() == DeltaProvenance::kRegularized) j["gamma"] = delta.gamma();
  j["entries"] = std::move(rows);
  return j;
}

std::string coalition_key(Coalition s, std::size_t n) {
  std::string key(n, '0');
  for (std::size_t i = 0; i < n; ++i)
    if (s >> i & 1) key[n - 1 - i] = '1';
  return key;
}

CoalitionOracle parse_game_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kConfig, std::string("game JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("n") || !j.contains("v") || !j["n"].is_number_unsigned() || !j["v"].is_object()) {
    throw Error(Errc::kConfig, "game JSON needs an unsigned \"n\" and an object \"v\"");
  }
  const auto n = j["n"].get<std::size_t>();
  if (n < 1 || n > 20) throw Error(Errc::kTooManyClients, "game tables support 1 <= n <= 20");
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> values(subsets);
  std::vector<bool> seen(subsets, false);
  for (const auto& [key, value] : j["v"].items()) {
    if (key.size() != n || key.find_first_not_of("01") != std::string::npos) {
      throw Error(Errc::kConfig, "game key '" + key + "' is not an n-character bitmask");
    }
    if (!value.is_number()) throw Error(Errc::kConfig, "game value for '" + key + "' is not a number");
    Coalition s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (key[n - 1 - i] == '1') s |= Coalition{1} << i;
    values[s] = value.get<double>();
    seen[s] = true;
  }
  for (Coalition s = 0; s < subsets; ++s)
    if (!seen[s]) throw Error(Errc::kConfig, "game is missing coalition " + coalition_key(s, n));
  return CoalitionOracle::from_table(std::move(values));
}

CoalitionOracle load_game_json(const std::filesystem::path& path) { return parse_game_json(read_text_file(path)); }

nlohmann::json game_to_json(const CoalitionOracle& oracle) {
  const std::size_t n = oracle.clients();
  if (n > 20) throw Error(Errc::kTooManyClients, "game tables support n <= 20");
  nlohmann::json v = nlohmann::json::object();
  for (Coalition s = 0; s < (Coalition{1} << n); ++s) v[coalition_key(s, n)] = oracle(s);
  return {{"n", n}, {"v", std::move(v)}};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  out += '\n';
  return out;
}

}  // namespace kfca
