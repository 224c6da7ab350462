#include "bifi/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace bifi {

static_assert(std::endian::native == std::endian::little, "array files are written in host byte order");

namespace {

constexpr char kMagic[5] = {'B', 'I', 'F', 'I', '1'};
constexpr char kDtype[3] = {'f', '6', '4'};

std::string hex(const unsigned char* d, unsigned n) {
  std::ostringstream os;
  for (unsigned k = 0; k < n; ++k) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(d[k]);
  return os.str();
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr); }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  void update(const void* p, std::size_t n) { EVP_DigestUpdate(ctx_, p, n); }
  std::string finish() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    return hex(md, len);
  }

 private:
  EVP_MD_CTX* ctx_;
};

nlohmann::json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), v.size());
}

}  // namespace

void write_array(const fs::path& path, const RawArray& a) {
  std::uint64_t count = 1;
  for (auto d : a.dims) count *= d;
  if (count != a.data.size()) throw Error("array dims do not match data size for " + path.string());
  // write to a temporary name first so an interrupted run never leaves a
  // truncated file under the final name
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os.write(kMagic, sizeof kMagic);
    os.write(kDtype, sizeof kDtype);
    const std::uint32_t rank = static_cast<std::uint32_t>(a.dims.size());
    os.write(reinterpret_cast<const char*>(&rank), sizeof rank);
    os.write(reinterpret_cast<const char*>(a.dims.data()), a.dims.size() * sizeof(std::uint64_t));
    os.write(reinterpret_cast<const char*>(a.data.data()), a.data.size() * sizeof(double));
    if (!os) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

RawArray read_array(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  char magic[5], dtype[3];
  is.read(magic, sizeof magic);
  is.read(dtype, sizeof dtype);
  if (!is || std::memcmp(magic, kMagic, 5) != 0) throw Error(path.string() + " is not a BIFI1 array file");
  if (std::memcmp(dtype, kDtype, 3) != 0) throw Error(path.string() + ": unsupported dtype");
  std::uint32_t rank = 0;
  is.read(reinterpret_cast<char*>(&rank), sizeof rank);
  RawArray a;
  a.dims.resize(rank);
  is.read(reinterpret_cast<char*>(a.dims.data()), rank * sizeof(std::uint64_t));
  std::uint64_t count = 1;
  for (auto d : a.dims) count *= d;
  a.data.resize(count);
  is.read(reinterpret_cast<char*>(a.data.data()), count * sizeof(double));
  if (!is) throw Error(path.string() + " is truncated");
  return a;
}

RawArray to_raw(const Matrix& m) {
  RawArray a;
  a.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  a.data.resize(m.size());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(a.data.data(), m.rows(),
                                                                                        m.cols()) = m;
  return a;
}

Matrix matrix_from_raw(const RawArray& a) {
  if (a.dims.size() != 2) throw Error("expected a rank-2 array");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      a.data.data(), static_cast<Eigen::Index>(a.dims[0]), static_cast<Eigen::Index>(a.dims[1]));
}

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(is.gcount()));
  }
  return h.finish();
}

std::string sha256_string(const std::string& s) {
  Sha256 h;
  h.update(s.data(), s.size());
  return h.finish();
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

nlohmann::json grid_to_json(const Grid& g) {
  return {{"dim", g.dim()},
          {"n_x", {g.n_x(0), g.n_x(1)}},
          {"x_extent", {g.x_extent(0), g.x_extent(1)}},
          {"n_v", g.n_v()},
          {"v_extent", g.v_extent()}};
}

Grid grid_from_json(const nlohmann::json& j) {
  return Grid(j.at("dim").get<int>(), j.at("n_x").get<std::array<int, 2>>(),
              j.at("x_extent").get<std::array<double, 2>>(), j.at("n_v").get<int>(), j.at("v_extent").get<double>());
}

void save_snapshot(const Snapshot& s, const fs::path& dir, const std::string& stem, const nlohmann::json& extra) {
  fs::create_directories(dir);
  Matrix vw(2, s.values.size());
  vw.row(0) = s.values.transpose();
  vw.row(1) = s.weights.transpose();
  const fs::path bin = dir / (stem + ".bin");
  write_array(bin, to_raw(vw));
  nlohmann::json j = {{"kind", "snapshot"},
                      {"components", s.layout.components},
                      {"grid", grid_to_json(s.layout.grid)},
                      {"z", vector_to_json(s.z)},
                      {"fidelity", to_string(s.fidelity)},
                      {"sample", s.sample},
                      {"wall_time_s", s.runtime_s},
                      {"data", bin.filename().string()},
                      {"sha256", sha256_file(bin)}};
  if (!extra.empty()) j["meta"] = extra;
  write_json(dir / (stem + ".json"), j);
}

Snapshot load_snapshot(const fs::path& dir, const std::string& stem) {
  const nlohmann::json j = read_json(dir / (stem + ".json"));
  const fs::path bin = dir / j.at("data").get<std::string>();
  if (sha256_file(bin) != j.at("sha256").get<std::string>()) throw Error("checksum mismatch for " + bin.string());
  const Matrix vw = matrix_from_raw(read_array(bin));
  Snapshot s;
  s.layout.components = j.at("components").get<std::vector<std::string>>();
  s.layout.grid = grid_from_json(j.at("grid"));
  if (vw.rows() != 2 || vw.cols() != s.layout.size()) throw LayoutMismatch("snapshot data does not match its layout");
  s.values = vw.row(0).transpose();
  s.weights = vw.row(1).transpose();
  s.z = vector_from_json(j.at("z"));
  s.fidelity = fidelity_from_string(j.at("fidelity").get<std::string>());
  s.sample = j.at("sample").get<int>();
  s.runtime_s = j.at("wall_time_s").get<double>();
  return s;
}

bool snapshot_valid(const fs::path& dir, const std::string& stem) {
  try {
    const fs::path man = dir / (stem + ".json");
    if (!fs::exists(man)) return false;
    const nlohmann::json j = read_json(man);
    const fs::path bin = dir / j.at("data").get<std::string>();
    return fs::exists(bin) && sha256_file(bin) == j.at("sha256").get<std::string>();
  } catch (const std::exception&) {
    return false;
  }
}

void save_selection(const GreedySelection& sel, const fs::path& dir, const std::string& stem) {
  fs::create_directories(dir);
  const fs::path lbin = dir / (stem + "_L.bin");
  const fs::path gbin = dir / (stem + "_G.bin");
  write_array(lbin, to_raw(sel.L));
  write_array(gbin, to_raw(sel.gramian));
  write_json(dir / (stem + ".json"), {{"kind", "greedy_selection"},
                                      {"pivots", sel.pivots},
                                      {"residuals", sel.residuals},
                                      {"L", lbin.filename().string()},
                                      {"L_sha256", sha256_file(lbin)},
                                      {"G", gbin.filename().string()},
                                      {"G_sha256", sha256_file(gbin)}});
}

GreedySelection load_selection(const fs::path& dir, const std::string& stem) {
  const nlohmann::json j = read_json(dir / (stem + ".json"));
  GreedySelection sel;
  sel.pivots = j.at("pivots").get<std::vector<int>>();
  sel.residuals = j.at("residuals").get<std::vector<double>>();
  for (const char* key : {"L", "G"}) {
    const fs::path bin = dir / j.at(key).get<std::string>();
    if (sha256_file(bin) != j.at(std::string(key) + "_sha256").get<std::string>())
      throw Error("checksum mismatch for " + bin.string());
    (key[0] == 'L' ? sel.L : sel.gramian) = matrix_from_raw(read_array(bin));
  }
  return sel;
}

void save_model(const BiFiModel& m, const fs::path& dir, const std::string& stem) {
  fs::create_directories(dir);
  save_selection(m.selection, dir, stem + "_selection");
  for (int k = 0; k < m.size(); ++k) {
    save_snapshot(m.lo_basis[k], dir, stem + "_lo_" + std::to_string(k));
    save_snapshot(m.hi_basis[k], dir, stem + "_hi_" + std::to_string(k));
  }
  write_json(dir / (stem + ".json"), {{"kind", "bifi_model"}, {"size", m.size()}, {"regularization", m.regularization}});
}

BiFiModel load_model(const fs::path& dir, const std::string& stem) {
  const nlohmann::json j = read_json(dir / (stem + ".json"));
  const int K = j.at("size").get<int>();
  SnapshotSet lo, hi;
  for (int k = 0; k < K; ++k) {
    lo.push_back(load_snapshot(dir, stem + "_lo_" + std::to_string(k)));
    hi.push_back(load_snapshot(dir, stem + "_hi_" + std::to_string(k)));
  }
  return build_model(load_selection(dir, stem + "_selection"), std::move(lo), std::move(hi));
}

void save_kl(const KLField& kl, const fs::path& dir, const std::string& stem) {
  fs::create_directories(dir);
  const fs::path vbin = dir / (stem + "_eigvecs.bin");
  write_array(vbin, to_raw(kl.eigvecs));
  write_json(dir / (stem + ".json"), {{"kind", "kl_field"},
                                      {"ell", kl.ell},
                                      {"sigma", kl.sigma},
                                      {"eigvals", vector_to_json(kl.eigvals)},
                                      {"n_modes", kl.n_modes},
                                      {"spectrum_fraction", kl.spectrum_fraction},
                                      {"grid", grid_to_json(kl.grid)},
                                      {"eigvecs", vbin.filename().string()},
                                      {"sha256", sha256_file(vbin)}});
}

KLField load_kl(const fs::path& dir, const std::string& stem) {
  const nlohmann::json j = read_json(dir / (stem + ".json"));
  const fs::path vbin = dir / j.at("eigvecs").get<std::string>();
  if (sha256_file(vbin) != j.at("sha256").get<std::string>()) throw Error("checksum mismatch for " + vbin.string());
  KLField kl;
  kl.ell = j.at("ell").get<double>();
  kl.sigma = j.at("sigma").get<double>();
  kl.eigvals = vector_from_json(j.at("eigvals"));
  kl.n_modes = j.at("n_modes").get<int>();
  kl.spectrum_fraction = j.at("spectrum_fraction").get<double>();
  kl.grid = grid_from_json(j.at("grid"));
  kl.eigvecs = matrix_from_raw(read_array(vbin));
  return kl;
}

}  // namespace bifi
