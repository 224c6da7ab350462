#pragma once

#include "bifi/bifidelity.hpp"
#include "bifi/random_inputs.hpp"
#include "bifi/snapshot.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bifi {

namespace fs = std::filesystem;

/// Raw array file: "BIFI1", "f64", uint32 rank, uint64 dims[rank], then the
/// values as little-endian doubles in row-major order.
struct RawArray {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

void write_array(const fs::path& path, const RawArray& a);
RawArray read_array(const fs::path& path);

/// Row-major storage of an Eigen matrix and back.
RawArray to_raw(const Matrix& m);
Matrix matrix_from_raw(const RawArray& a);

std::string sha256_file(const fs::path& path);
std::string sha256_string(const std::string& s);

void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

nlohmann::json grid_to_json(const Grid& g);
Grid grid_from_json(const nlohmann::json& j);

/// <stem>.bin holds values and weights (2 x n), <stem>.json the rest plus the
/// checksum of the binary.
void save_snapshot(const Snapshot& s, const fs::path& dir, const std::string& stem,
                   const nlohmann::json& extra = nlohmann::json::object());
Snapshot load_snapshot(const fs::path& dir, const std::string& stem);
/// True when both files exist and the recorded checksum matches.
bool snapshot_valid(const fs::path& dir, const std::string& stem);

void save_selection(const GreedySelection& sel, const fs::path& dir, const std::string& stem);
GreedySelection load_selection(const fs::path& dir, const std::string& stem);

/// Selection plus both bases; reloading refactorizes the same Gramian.
void save_model(const BiFiModel& m, const fs::path& dir, const std::string& stem);
BiFiModel load_model(const fs::path& dir, const std::string& stem);

void save_kl(const KLField& kl, const fs::path& dir, const std::string& stem);
KLField load_kl(const fs::path& dir, const std::string& stem);

}  // namespace bifi
