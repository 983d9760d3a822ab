#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "kfca/delta.hpp"
#include "kfca/shapley.hpp"
#include "kfca/signal_world.hpp"

namespace kfca {

// Canonical report bytes: "KFCA", format version, then L, n, m as uint32
// little-endian, then n * m label bytes in row-major order. L <= 256.
inline constexpr std::uint8_t kReportFormatVersion = 1;

std::vector<std::uint8_t> serialize_reports(const ReportMatrix& reports);
ReportMatrix deserialize_reports(std::span<const std::uint8_t> bytes);

// One line per client, comma-separated labels.
std::string reports_to_csv(const ReportMatrix& reports);
// labels = 0 infers L = max(2, largest label + 1).
ReportMatrix reports_from_csv(std::string_view text, std::size_t labels = 0);

// Binary when the file starts with the magic, CSV otherwise.
ReportMatrix read_reports(const std::filesystem::path& path, std::size_t labels = 0);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
// SHA-256 over canonical report bytes followed by the salt bytes.
std::string commitment_digest(const ReportMatrix& reports, std::string_view salt);

nlohmann::json delta_to_json(const DeltaMatrix& delta);

// {"n": 3, "v": {"000": 0.1, "001": 0.7, ...}}. Keys are n-character binary
// strings, most significant character = highest client index, so "001" is
// the coalition {client 0}. Every subset must be present.
CoalitionOracle parse_game_json(std::string_view text);
CoalitionOracle load_game_json(const std::filesystem::path& path);
nlohmann::json game_to_json(const CoalitionOracle& oracle);
std::string coalition_key(Coalition s, std::size_t n);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// Comma-joined row terminated by '\n'. Fields are written as given.
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace kfca
