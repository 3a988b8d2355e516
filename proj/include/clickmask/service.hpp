#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "clickmask/click.hpp"
#include "clickmask/config.hpp"

namespace httplib {
class Server;
}

namespace clickmask {

struct CatalogEntry {
    std::string image_id;
    std::filesystem::path path;
    int width = 0;
    int height = 0;
    bool annotated = false;
};

/// Annotation session backed by a directory holding manifest.json and
/// masks/<image_id>.png. Every mutation is written through before it returns.
/// Safe to share between threads: mutations take an exclusive lock, reads a
/// shared one.
class Session {
public:
    /// Scans `images_dir` (.png / .pgm, id = file stem) and loads an existing
    /// manifest from `session_dir` if there is one.
    Session(std::filesystem::path images_dir, std::filesystem::path session_dir, EvolutionParams params);

    std::vector<CatalogEntry> catalog() const;
    std::optional<CatalogEntry> find(const std::string& image_id) const;
    std::uint64_t revision() const;
    const EvolutionParams& params() const noexcept { return params_; }

    std::optional<BinaryMask> mask(const std::string& image_id) const;

    /// Throws std::out_of_range for unknown ids and std::invalid_argument for
    /// a dimension mismatch.
    std::uint64_t accept(const std::string& image_id, const BinaryMask& mask,
                         std::optional<Click> click = std::nullopt);
    std::uint64_t clear(const std::string& image_id);

    /// params.json, clicks.csv and masks/<id>.png in id order.
    std::vector<std::uint8_t> export_archive() const;

private:
    struct Accepted {
        BinaryMask mask;
        std::optional<Click> click;
    };

    void load_manifest();
    void persist_locked() const;

    std::filesystem::path images_dir_;
    std::filesystem::path session_dir_;
    EvolutionParams params_;
    std::map<std::string, CatalogEntry> catalog_;
    std::map<std::string, Accepted> accepted_;
    std::uint64_t revision_ = 0;
    mutable std::shared_mutex mutex_;
};

/// Registers every endpoint on `server`. `config` supplies the default
/// parameters and window; `static_dir`, when set, is served at "/".
void install_routes(httplib::Server& server, Session& session, const Config& config,
                    const std::optional<std::filesystem::path>& static_dir = std::nullopt);

/// JSON wire form of a mask: {width, height, rle, png}.
nlohmann::json mask_to_json(const BinaryMask& mask);

/// Accepts {width, height, rle} or {png}; throws std::invalid_argument.
BinaryMask mask_from_json(const nlohmann::json& doc);

}  // namespace clickmask
