#include "manifest.hpp"

#include <openssl/evp.h>

#include <Eigen/Core>

#include <array>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "optitomo/errors.hpp"

namespace optitomo::app {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("SHA-256 init failed");
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

RunManifest::RunManifest(std::string command, std::filesystem::path out_dir)
    : command_(std::move(command)), out_dir_(std::move(out_dir)) {}

void RunManifest::write(double wall_seconds) const {
  nlohmann::json j;
  j["command"] = command_;
  j["config"] = config_path_;
  j["seed"] = seed_;
  j["versions"] = {{"optitomo", OPTITOMO_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  auto digests = [](const std::vector<std::filesystem::path>& files, const std::filesystem::path& base) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : files) {
      const auto full = f.is_absolute() || base.empty() ? f : base / f;
      arr.push_back({{"path", f.generic_string()},
                     {"sha256", sha256_file(full)},
                     {"bytes", std::filesystem::file_size(full)}});
    }
    return arr;
  };
  j["inputs"] = digests(inputs_, {});
  j["outputs"] = digests(outputs_, out_dir_);
  j["wall_time_s"] = wall_seconds;
  j["results"] = results_;
  std::ofstream out(out_dir_ / "manifest.json");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write manifest.json");
}

}  // namespace optitomo::app
