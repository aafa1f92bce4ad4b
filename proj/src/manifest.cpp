#include "hnls/manifest.hpp"

#include "hnls/checkpoint.hpp"
#include "hnls/errors.hpp"

#include <openssl/evp.h>

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

namespace hnls {

namespace fs = std::filesystem;
using nlohmann::json;

std::string git_blob_hash(std::string_view bytes) {
    const std::string header = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    require(ctx != nullptr, ErrorKind::Io, "cannot allocate a digest context");
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                    EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, md, &len) == 1;
    EVP_MD_CTX_free(ctx);
    require(ok, ErrorKind::Io, "SHA-1 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

json RunManifest::to_json() const {
    json arts = json::array();
    for (const auto& a : artifacts) arts.push_back({{"path", a.path}, {"size", a.size}, {"hash", a.hash}});
    return {{"experiment", experiment}, {"config", config_text}, {"artifacts", arts},
            {"wall_time", wall_time}, {"passed", passed}, {"stages", stages}};
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    try {
        m.experiment = j.at("experiment").get<std::string>();
        m.config_text = j.at("config").get<std::string>();
        m.wall_time = j.at("wall_time").get<double>();
        m.passed = j.at("passed").get<bool>();
        m.stages = j.at("stages");
        for (const auto& a : j.at("artifacts"))
            m.artifacts.push_back({a.at("path").get<std::string>(), a.at("size").get<std::uintmax_t>(),
                                   a.at("hash").get<std::string>()});
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("malformed manifest: ") + e.what());
    }
    return m;
}

std::vector<ArtifactEntry> scan_artifacts(const fs::path& dir) {
    std::vector<ArtifactEntry> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), dir).generic_string();
        if (rel == kManifestName || rel == kLockName) continue;
        const auto bytes = read_file(entry.path());
        out.push_back({rel, bytes.size(), git_blob_hash(bytes)});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    return out;
}

void write_manifest(const fs::path& dir, const RunManifest& m) {
    write_file_atomic(dir / kManifestName, m.to_json().dump(2) + "\n");
}

RunManifest read_manifest(const fs::path& dir) {
    const auto path = dir / kManifestName;
    if (!fs::exists(path)) fail(ErrorKind::Io, "no manifest in " + dir.string() + " (incomplete or foreign run)");
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("manifest is not JSON: ") + e.what());
    }
    return RunManifest::from_json(j);
}

void verify_manifest(const fs::path& dir, const RunManifest& m) {
    for (const auto& a : m.artifacts) {
        const auto path = dir / a.path;
        if (!fs::exists(path)) fail(ErrorKind::Io, "artifact listed in the manifest is missing: " + a.path);
        const auto bytes = read_file(path);
        const auto h = git_blob_hash(bytes);
        if (bytes.size() != a.size || h != a.hash)
            fail(ErrorKind::HashMismatch, a.path + ": expected " + a.hash + ", found " + h);
    }
}

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / kLockName) {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        const int err = errno;
        if (err == EEXIST) fail(ErrorKind::Io, "run directory is locked by another run: " + dir.string());
        fail(ErrorKind::Io, "cannot create lock file " + path_.string() + ": " + std::strerror(err));
    }
    const auto pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

DirectoryLock::~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

} // namespace hnls
