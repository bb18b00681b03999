#include <openssl/evp.h>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "nystab/bench.hpp"
#include "nystab/errors.hpp"

namespace nystab {

namespace fs = std::filesystem;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::IoError, "cannot open '" + path + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  require(ctx != nullptr && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1,
          Errc::IoError, "digest init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const std::streamsize got = in.gcount();
    if (got > 0)
      require(EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) == 1,
              Errc::IoError, "digest update failed");
  }
  require(!in.bad(), Errc::IoError, "read of '" + path + "' failed");
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_DigestFinal_ex(ctx.get(), md, &len) == 1, Errc::IoError, "digest final failed");
  static const char* hex = "0123456789abcdef";
  std::string out(static_cast<std::size_t>(len) * 2, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hex[md[i] >> 4];
    out[2 * i + 1] = hex[md[i] & 0xf];
  }
  return out;
}

namespace {

bool valid_sha256(const std::string& s) {
  if (s == "-") return true;
  if (s.size() != 64) return false;
  for (char c : s)
    if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

const ManifestEntry* find_entry(const std::vector<ManifestEntry>& manifest,
                                const std::string& name) {
  for (const ManifestEntry& e : manifest)
    if (e.name == name) return &e;
  return nullptr;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(std::istream& in) {
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    ManifestEntry e;
    std::string extra;
    if (!(row >> e.name)) continue;  // blank line
    require(static_cast<bool>(row >> e.url >> e.sha256) && !(row >> extra),
            Errc::MalformedLine,
            "manifest line " + std::to_string(lineno) + ": expected 'name url sha256'");
    e.sha256 = lower(e.sha256);
    require(valid_sha256(e.sha256), Errc::MalformedLine,
            "manifest line " + std::to_string(lineno) + ": bad sha256 '" + e.sha256 + "'");
    require(find_entry(out, e.name) == nullptr, Errc::ConfigInvalid,
            "duplicate dataset '" + e.name + "' in manifest");
    out.push_back(std::move(e));
  }
  return out;
}

// Hashes are left unpinned ("-"): upstream files have no published digests,
// so the first verified download is the reference. Pin them by editing a
// manifest file and passing it explicitly.
std::vector<ManifestEntry> builtin_manifest() {
  static const char* base = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/";
  const auto entry = [&](const char* name, const char* rel) {
    return ManifestEntry{name, std::string(base) + rel, "-"};
  };
  return {
      entry("a9a", "binary/a9a"),
      entry("cadata", "regression/cadata"),
      entry("cod-rna", "binary/cod-rna"),
      entry("connect-4", "multiclass/connect-4"),
      entry("covtype.binary", "binary/covtype.libsvm.binary.bz2"),
      entry("ijcnn1", "binary/ijcnn1.bz2"),
      entry("phishing", "binary/phishing"),
      entry("sensit_vehicle", "multiclass/vehicle/combined.bz2"),
      entry("sensorless", "multiclass/Sensorless.scale"),
      entry("skin_nonskin", "binary/skin_nonskin"),
      entry("w8a", "binary/w8a"),
      entry("YearPredictionMSD", "regression/YearPredictionMSD.bz2"),
  };
}

std::vector<FetchReport> fetch_datasets(const std::vector<std::string>& names,
                                        const std::string& cache_dir,
                                        const std::vector<ManifestEntry>& manifest,
                                        const Downloader& download) {
  require(!cache_dir.empty(), Errc::ConfigInvalid, "cache directory must be named");
  require(static_cast<bool>(download), Errc::ConfigInvalid, "no downloader provided");
  const fs::path dir(cache_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, Errc::IoError, "cannot create cache directory '" + cache_dir + "'");

  std::vector<FetchReport> reports;
  for (const std::string& name : names) {
    const ManifestEntry* entry = find_entry(manifest, name);
    if (entry == nullptr) {
      std::string known;
      for (const ManifestEntry& e : manifest) known += (known.empty() ? "" : ", ") + e.name;
      raise(Errc::ConfigInvalid, "unknown dataset '" + name + "'; known: " + known);
    }
    const bool pinned = entry->sha256 != "-";
    const fs::path dest = dir / entry->name;

    if (fs::exists(dest, ec)) {
      if (pinned) {
        const std::string got = sha256_file(dest.string());
        if (got != entry->sha256) {
          fs::remove(dest, ec);
          raise(Errc::ChecksumMismatch,
                "cached '" + name + "': sha256 " + got + " != " + entry->sha256);
        }
      }
      reports.push_back({name, FetchStatus::cached, dest.string()});
      continue;
    }

    fs::path tmp = dest;
    tmp += ".part";
    fs::remove(tmp, ec);
    try {
      download(entry->url, tmp.string());
    } catch (...) {
      fs::remove(tmp, ec);
      throw;
    }
    require(fs::exists(tmp, ec), Errc::NetworkError,
            "downloader produced no file for '" + name + "'");
    if (pinned) {
      const std::string got = sha256_file(tmp.string());
      if (got != entry->sha256) {
        fs::remove(tmp, ec);
        raise(Errc::ChecksumMismatch,
              "downloaded '" + name + "': sha256 " + got + " != " + entry->sha256);
      }
    }
    fs::rename(tmp, dest, ec);
    require(!ec, Errc::IoError, "cannot move download into '" + dest.string() + "'");
    reports.push_back({name, FetchStatus::downloaded, dest.string()});
  }
  return reports;
}

}  // namespace nystab
