#include "distillkit/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "distillkit/errors.hpp"

using nlohmann::json;

namespace distillkit {

std::string sha256_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("sha256: cannot open " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof buf);
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(f.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::string out;
    char hex[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(hex, sizeof hex, "%02x", digest[i]);
        out += hex;
    }
    return out;
}

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const json& resolved_config, const std::string& started_at,
                        const std::vector<std::string>& output_files) {
    json outputs = json::array();
    for (const auto& rel : output_files)
        outputs.push_back({{"path", rel}, {"sha256", sha256_file(out_dir + "/" + rel)}});

    json manifest = {{"command", command},
                     {"config", resolved_config},
                     {"version", DISTILLKIT_VERSION},
                     {"started_at", started_at},
                     {"finished_at", iso8601_now()},
                     {"outputs", outputs}};
    std::ofstream f(out_dir + "/manifest.json");
    if (!f) throw IoError("manifest: cannot write in " + out_dir);
    f << manifest.dump(2) << '\n';
}

}  // namespace distillkit
