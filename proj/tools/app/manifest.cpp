#include "manifest.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

#include "metastab/version.hpp"

namespace metastab::app {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string() + " for hashing");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 initialisation failed");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", md[i]);
        hex += byte;
    }
    return hex;
}

nlohmann::json write_outputs(const ExperimentOutputs& outputs, const std::filesystem::path& dir) {
    nlohmann::json files = nlohmann::json::array();
    auto record = [&](const std::string& name) {
        const auto path = dir / name;
        files.push_back({{"path", name},
                         {"bytes", std::filesystem::file_size(path)},
                         {"sha256", sha256_file(path)}});
    };
    for (const auto& t : outputs.tables) {
        write_csv(dir / t.file, t.table);
        record(t.file);
    }
    for (const auto& d : outputs.documents) {
        std::ofstream out(dir / d.file);
        if (!out) throw std::runtime_error("cannot write " + (dir / d.file).string());
        out << d.doc.dump(2) << '\n';
        out.close();
        record(d.file);
    }
    return files;
}

nlohmann::json make_manifest(const ExperimentConfig& config, const ExperimentOutputs& outputs,
                             const nlohmann::json& files, const RunInfo& info) {
    return {{"tool", "metastab"},
            {"version", version_string()},
            {"experiment", to_string(config.experiment)},
            {"config", to_json(config)},
            {"started_at", info.started_at},
            {"wall_time_s", info.wall_seconds},
            {"workers", info.workers},
            {"tasks", outputs.tasks},
            {"failures", outputs.failures},
            {"files", files}};
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace metastab::app
