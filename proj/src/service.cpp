#include "clickmask/service.hpp"

#include <httplib.h>

#include <fstream>
#include <mutex>
#include <sstream>

#include "clickmask/annotate.hpp"
#include "clickmask/archive.hpp"
#include "clickmask/codec.hpp"

namespace clickmask {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_atomic(const fs::path& path, std::span<const std::uint8_t> bytes)
{
    fs::path tmp = path;
    tmp += ".tmp";
    write_file_bytes(tmp, bytes);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

void write_atomic(const fs::path& path, const std::string& text)
{
    write_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

bool safe_id(const std::string& id)
{
    return !id.empty() && id != "." && id != ".." && id.find('/') == std::string::npos &&
           id.find('\\') == std::string::npos;
}

}  // namespace

// --- Session ---------------------------------------------------------------

Session::Session(fs::path images_dir, fs::path session_dir, EvolutionParams params)
    : images_dir_(std::move(images_dir)), session_dir_(std::move(session_dir)), params_(params)
{
    std::error_code ec;
    if (!fs::is_directory(images_dir_, ec))
        throw IoError("images directory not readable: " + images_dir_.string());
    for (const auto& entry : fs::directory_iterator(images_dir_, ec)) {
        if (!entry.is_regular_file())
            continue;
        const auto ext = entry.path().extension().string();
        if (ext != ".png" && ext != ".pgm")
            continue;
        const std::string id = entry.path().stem().string();
        if (!safe_id(id) || catalog_.count(id))
            continue;
        try {
            const GrayImage img = load_image(entry.path());
            catalog_[id] = {id, entry.path(), img.width(), img.height(), false};
        } catch (const IoError&) {
            // unreadable rasters are left out of the catalog
        }
    }
    if (ec)
        throw IoError("cannot list " + images_dir_.string() + ": " + ec.message());
    fs::create_directories(session_dir_ / "masks", ec);
    if (ec)
        throw IoError("cannot create session directory " + session_dir_.string() + ": " + ec.message());
    load_manifest();
}

void Session::load_manifest()
{
    const fs::path manifest = session_dir_ / "manifest.json";
    if (!fs::exists(manifest))
        return;
    const auto bytes = read_file_bytes(manifest);
    json doc;
    try {
        doc = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw IoError("corrupt session manifest " + manifest.string() + ": " + e.what());
    }
    revision_ = doc.value("revision", std::uint64_t{0});
    const json accepted = doc.value("accepted", json::object());
    for (const auto& [id, item] : accepted.items()) {
        const auto it = catalog_.find(id);
        if (it == catalog_.end())
            continue;
        BinaryMask m = load_mask(session_dir_ / item.at("mask").get<std::string>());
        if (m.width() != it->second.width || m.height() != it->second.height)
            continue;
        Accepted a{std::move(m), std::nullopt};
        if (item.contains("click") && item["click"].is_object())
            a.click = Click{id, item["click"].at("x").get<int>(), item["click"].at("y").get<int>()};
        accepted_[id] = std::move(a);
        it->second.annotated = true;
    }
}

void Session::persist_locked() const
{
    json acc = json::object();
    for (const auto& [id, a] : accepted_) {
        json item{{"mask", "masks/" + id + ".png"}};
        item["click"] = a.click ? json{{"x", a.click->x}, {"y", a.click->y}} : json(nullptr);
        acc[id] = std::move(item);
    }
    const json doc{{"revision", revision_}, {"accepted", acc}, {"params", to_json(params_)}};
    write_atomic(session_dir_ / "manifest.json", doc.dump(2) + "\n");
}

std::vector<CatalogEntry> Session::catalog() const
{
    std::shared_lock lock(mutex_);
    std::vector<CatalogEntry> out;
    for (const auto& [id, e] : catalog_)
        out.push_back(e);
    return out;
}

std::optional<CatalogEntry> Session::find(const std::string& image_id) const
{
    std::shared_lock lock(mutex_);
    const auto it = catalog_.find(image_id);
    if (it == catalog_.end())
        return std::nullopt;
    return it->second;
}

std::uint64_t Session::revision() const
{
    std::shared_lock lock(mutex_);
    return revision_;
}

std::optional<BinaryMask> Session::mask(const std::string& image_id) const
{
    std::shared_lock lock(mutex_);
    const auto it = accepted_.find(image_id);
    if (it == accepted_.end())
        return std::nullopt;
    return it->second.mask;
}

std::uint64_t Session::accept(const std::string& image_id, const BinaryMask& mask, std::optional<Click> click)
{
    std::unique_lock lock(mutex_);
    const auto it = catalog_.find(image_id);
    if (it == catalog_.end())
        throw std::out_of_range("unknown image '" + image_id + "'");
    if (mask.width() != it->second.width || mask.height() != it->second.height)
        throw std::invalid_argument("mask is " + std::to_string(mask.width()) + "x" +
                                    std::to_string(mask.height()) + ", image is " +
                                    std::to_string(it->second.width) + "x" + std::to_string(it->second.height));
    if (click)
        click->image_id = image_id;
    write_atomic(session_dir_ / "masks" / (image_id + ".png"), encode_mask_png(mask));
    accepted_[image_id] = {mask, click};
    it->second.annotated = true;
    ++revision_;
    persist_locked();
    return revision_;
}

std::uint64_t Session::clear(const std::string& image_id)
{
    std::unique_lock lock(mutex_);
    const auto it = catalog_.find(image_id);
    if (it == catalog_.end())
        throw std::out_of_range("unknown image '" + image_id + "'");
    accepted_.erase(image_id);
    it->second.annotated = false;
    ++revision_;
    persist_locked();
    std::error_code ec;
    fs::remove(session_dir_ / "masks" / (image_id + ".png"), ec);
    return revision_;
}

std::vector<std::uint8_t> Session::export_archive() const
{
    std::shared_lock lock(mutex_);
    std::vector<ArchiveMember> members;
    const std::string params = to_json(params_).dump(2) + "\n";
    members.push_back({"params.json", {params.begin(), params.end()}});
    std::string log = "image_id,x,y\n";
    for (const auto& [id, a] : accepted_)
        if (a.click)
            log += id + "," + std::to_string(a.click->x) + "," + std::to_string(a.click->y) + "\n";
    members.push_back({"clicks.csv", {log.begin(), log.end()}});
    for (const auto& [id, a] : accepted_)
        members.push_back({"masks/" + id + ".png", encode_mask_png(a.mask)});
    return write_zip(members);
}

// --- wire formats ----------------------------------------------------------

json mask_to_json(const BinaryMask& mask)
{
    json rows = json::array();
    for (const auto& runs : rle_encode(mask)) {
        json row = json::array();
        for (const auto& [start, len] : runs)
            row.push_back({start, len});
        rows.push_back(std::move(row));
    }
    return json{{"width", mask.width()},
                {"height", mask.height()},
                {"rle", rows},
                {"png", base64_encode(encode_mask_png(mask))}};
}

BinaryMask mask_from_json(const json& doc)
{
    if (!doc.is_object())
        throw std::invalid_argument("mask must be an object");
    if (doc.contains("rle")) {
        if (!doc.contains("width") || !doc.contains("height") || !doc["width"].is_number_integer() ||
            !doc["height"].is_number_integer() || !doc["rle"].is_array())
            throw std::invalid_argument("rle mask needs integer width, height and an rle array");
        std::vector<RowRuns> rows;
        for (const auto& row : doc["rle"]) {
            if (!row.is_array())
                throw std::invalid_argument("rle rows must be arrays");
            RowRuns runs;
            for (const auto& run : row) {
                if (!run.is_array() || run.size() != 2 || !run[0].is_number_integer() ||
                    !run[1].is_number_integer())
                    throw std::invalid_argument("rle runs must be [start, length]");
                runs.emplace_back(run[0].get<int>(), run[1].get<int>());
            }
            rows.push_back(std::move(runs));
        }
        return rle_decode(rows, doc["width"].get<int>(), doc["height"].get<int>());
    }
    if (doc.contains("png") && doc["png"].is_string()) {
        const auto bytes = base64_decode(doc["png"].get<std::string>());
        try {
            const GrayImage img = decode_image(bytes);
            BinaryMask m(img.width(), img.height());
            for (std::size_t k = 0; k < m.size(); ++k)
                m[k] = img[k] >= 0.5 ? 1 : 0;
            return m;
        } catch (const IoError& e) {
            throw std::invalid_argument(std::string("mask png: ") + e.what());
        }
    }
    throw std::invalid_argument("mask needs either rle or png");
}

// --- routes ----------------------------------------------------------------

namespace {

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message)
{
    send_json(res, status, json{{"error", message}});
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res)
{
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        send_error(res, 400, std::string("malformed JSON: ") + e.what());
        return std::nullopt;
    }
}

json roi_json(const RoiSpec& r)
{
    return json{{"left", r.left}, {"top", r.top}, {"width", r.width}, {"height", r.height}};
}

}  // namespace

void install_routes(httplib::Server& server, Session& session, const Config& config,
                    const std::optional<fs::path>& static_dir)
{
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });

    server.Get("/images", [&session](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& e : session.catalog())
            list.push_back({{"image_id", e.image_id},
                            {"width", e.width},
                            {"height", e.height},
                            {"annotated", e.annotated}});
        send_json(res, 200, json{{"images", list}});
    });

    server.Get(R"(/images/([^/]+))", [&session](const httplib::Request& req, httplib::Response& res) {
        const auto entry = session.find(req.matches[1]);
        if (!entry)
            return send_error(res, 404, "unknown image");
        try {
            const auto bytes = read_file_bytes(entry->path);
            const bool png = entry->path.extension() == ".png";
            res.set_content(std::string(bytes.begin(), bytes.end()),
                            png ? "image/png" : "image/x-portable-graymap");
        } catch (const IoError& e) {
            send_error(res, 500, e.what());
        }
    });

    server.Get(R"(/images/([^/]+)/mask)", [&session](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        if (!session.find(id))
            return send_error(res, 404, "unknown image");
        const auto m = session.mask(id);
        if (!m)
            return send_error(res, 404, "no accepted mask");
        const auto png = encode_mask_png(*m);
        res.set_content(std::string(png.begin(), png.end()), "image/png");
    });

    server.Post("/annotate", [&session, config](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, res);
        if (!body)
            return;
        if (!body->is_object() || !body->contains("image_id") || !(*body)["image_id"].is_string())
            return send_error(res, 422, "image_id (string) is required");
        if (!body->contains("x") || !body->contains("y") || !(*body)["x"].is_number_integer() ||
            !(*body)["y"].is_number_integer())
            return send_error(res, 422, "x and y must be integers");
        const std::string id = (*body)["image_id"];
        const auto entry = session.find(id);
        if (!entry)
            return send_error(res, 404, "unknown image");
        const Click click{id, (*body)["x"].get<int>(), (*body)["y"].get<int>()};
        if (click.x < 0 || click.y < 0 || click.x >= entry->width || click.y >= entry->height)
            return send_error(res, 422,
                              "click (" + std::to_string(click.x) + "," + std::to_string(click.y) + ") outside " +
                                  std::to_string(entry->width) + "x" + std::to_string(entry->height) + " image");

        EvolutionParams params = session.params();
        try {
            if (body->contains("params") && !(*body)["params"].is_null())
                apply_params_json(params, (*body)["params"]);
            params.validate();
        } catch (const std::invalid_argument& e) {
            return send_error(res, 422, e.what());
        }

        try {
            const GrayImage image = load_image(entry->path);
            AnnotateOptions opts = config.annotate_options();
            const AnnotationResult r = annotate(image, click, params, opts);
            send_json(res, 200,
                      json{{"image_id", id},
                           {"mask", mask_to_json(r.mask)},
                           {"iterations", r.iterations},
                           {"converged", r.converged},
                           {"oscillating", r.oscillating},
                           {"c1", r.c1},
                           {"c2", r.c2},
                           {"target_components", r.target_components},
                           {"roi", roi_json(r.roi)}});
        } catch (const SeedError& e) {
            json err{{"error", e.what()},
                     {"kind", dynamic_cast<const NoSeedPixels*>(&e) ? "NoSeedPixels" : "AllSeedPixels"}};
            if (e.roi)
                err["roi"] = roi_json(*e.roi);
            send_json(res, 409, err);
        } catch (const IoError& e) {
            send_error(res, 500, e.what());
        }
    });

    server.Post(R"(/images/([^/]+)/accept)", [&session](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        if (!session.find(id))
            return send_error(res, 404, "unknown image");
        const auto body = parse_body(req, res);
        if (!body)
            return;
        try {
            if (!body->is_object() || !body->contains("mask"))
                throw std::invalid_argument("mask is required");
            const BinaryMask m = mask_from_json((*body)["mask"]);
            std::optional<Click> click;
            if (body->contains("click") && (*body)["click"].is_object()) {
                const auto& c = (*body)["click"];
                if (!c.contains("x") || !c.contains("y") || !c["x"].is_number_integer() ||
                    !c["y"].is_number_integer())
                    throw std::invalid_argument("click needs integer x and y");
                click = Click{id, c["x"].get<int>(), c["y"].get<int>()};
            }
            send_json(res, 200, json{{"revision", session.accept(id, m, click)}});
        } catch (const std::out_of_range& e) {
            send_error(res, 404, e.what());
        } catch (const std::invalid_argument& e) {
            send_error(res, 422, e.what());
        } catch (const IoError& e) {
            send_error(res, 500, e.what());
        }
    });

    server.Post(R"(/images/([^/]+)/clear)", [&session](const httplib::Request& req, httplib::Response& res) {
        try {
            send_json(res, 200, json{{"revision", session.clear(req.matches[1])}});
        } catch (const std::out_of_range& e) {
            send_error(res, 404, e.what());
        } catch (const IoError& e) {
            send_error(res, 500, e.what());
        }
    });

    server.Get("/export", [&session](const httplib::Request&, httplib::Response& res) {
        const auto zip = session.export_archive();
        res.set_header("Content-Disposition", "attachment; filename=\"pseudo_masks.zip\"");
        res.set_content(std::string(zip.begin(), zip.end()), "application/zip");
    });

    if (static_dir)
        server.set_mount_point("/", static_dir->string());
}

}  // namespace clickmask
