#include "clickmask/config.hpp"

#include <functional>
#include <map>

namespace clickmask {

using nlohmann::json;

namespace {

double number(const json& v, const std::string& key)
{
    if (!v.is_number())
        throw std::invalid_argument("config key '" + key + "' must be a number");
    return v.get<double>();
}

int integer(const json& v, const std::string& key)
{
    if (!v.is_number_integer())
        throw std::invalid_argument("config key '" + key + "' must be an integer");
    return v.get<int>();
}

bool boolean(const json& v, const std::string& key)
{
    if (!v.is_boolean())
        throw std::invalid_argument("config key '" + key + "' must be true or false");
    return v.get<bool>();
}

using Setter = std::function<void(EvolutionParams&, const json&, const std::string&)>;

const std::map<std::string, Setter>& param_setters()
{
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto real = [&t](const char* k, double EvolutionParams::*f) {
            t[k] = [f](EvolutionParams& p, const json& v, const std::string& key) { p.*f = number(v, key); };
        };
        auto whole = [&t](const char* k, int EvolutionParams::*f) {
            t[k] = [f](EvolutionParams& p, const json& v, const std::string& key) { p.*f = integer(v, key); };
        };
        auto flag = [&t](const char* k, bool EvolutionParams::*f) {
            t[k] = [f](EvolutionParams& p, const json& v, const std::string& key) { p.*f = boolean(v, key); };
        };
        real("c0", &EvolutionParams::c0);
        real("i", &EvolutionParams::i);
        real("mu", &EvolutionParams::mu);
        real("alpha", &EvolutionParams::alpha);
        real("delta", &EvolutionParams::delta);
        real("epsilon", &EvolutionParams::epsilon);
        real("dt", &EvolutionParams::dt);
        real("edge_sigma", &EvolutionParams::edge_sigma);
        real("edge_scale", &EvolutionParams::edge_scale);
        real("cfl", &EvolutionParams::cfl);
        real("grad_floor", &EvolutionParams::grad_floor);
        whole("band_radius", &EvolutionParams::band_radius);
        whole("max_iters", &EvolutionParams::max_iters);
        whole("stall_window", &EvolutionParams::stall_window);
        whole("osc_window", &EvolutionParams::osc_window);
        whole("tie_sign", &EvolutionParams::tie_sign);
        flag("use_ed", &EvolutionParams::use_ed);
        flag("signed_coefficient", &EvolutionParams::signed_coefficient);
        t["beta"] = [](EvolutionParams& p, const json& v, const std::string& key) {
            if (v.is_null())
                p.beta.reset();
            else
                p.beta = number(v, key);
        };
        return t;
    }();
    return table;
}

}  // namespace

void Config::validate() const
{
    effective_params().validate();
    match.validate();
    if (window < 8)
        throw std::invalid_argument("window must be >= 8");
    if (workers < 1)
        throw std::invalid_argument("workers must be >= 1");
    if (!(fa_scale > 0.0))
        throw std::invalid_argument("fa_scale must be > 0");
    if (vanilla_half < 0)
        throw std::invalid_argument("vanilla_half must be >= 0");
}

EvolutionParams Config::effective_params() const
{
    EvolutionParams p = params;
    if (disable_ed)
        p.use_ed = false;
    if (disable_signed_coeff)
        p.signed_coefficient = false;
    return p;
}

AnnotateOptions Config::annotate_options() const
{
    AnnotateOptions o;
    o.window = window;
    o.init = vanilla_init ? InitMode::click_square : InitMode::threshold;
    o.square_half = vanilla_half;
    return o;
}

void apply_params_json(EvolutionParams& params, const json& doc)
{
    if (!doc.is_object())
        throw std::invalid_argument("params must be a JSON object");
    const auto& table = param_setters();
    for (const auto& [key, value] : doc.items()) {
        const auto it = table.find(key);
        if (it == table.end())
            throw std::invalid_argument("unknown parameter '" + key + "'");
        it->second(params, value, key);
    }
}

void apply_json(Config& config, const json& doc)
{
    if (!doc.is_object())
        throw std::invalid_argument("config must be a JSON object");
    json rest = json::object();
    for (const auto& [key, v] : doc.items()) {
        if (key == "window")
            config.window = integer(v, key);
        else if (key == "centroid_dist")
            config.match.centroid_dist = number(v, key);
        else if (key == "fa_all_false_pixels")
            config.match.all_false_pixels = boolean(v, key);
        else if (key == "workers")
            config.workers = integer(v, key);
        else if (key == "seed") {
            if (!v.is_number_unsigned())
                throw std::invalid_argument("config key 'seed' must be a non-negative integer");
            config.seed = v.get<std::uint64_t>();
        } else if (key == "fa_scale")
            config.fa_scale = number(v, key);
        else if (key == "disable_ed")
            config.disable_ed = boolean(v, key);
        else if (key == "disable_signed_coeff")
            config.disable_signed_coeff = boolean(v, key);
        else if (key == "vanilla_init")
            config.vanilla_init = boolean(v, key);
        else if (key == "vanilla_half")
            config.vanilla_half = integer(v, key);
        else
            rest[key] = v;
    }
    apply_params_json(config.params, rest);
}

json to_json(const EvolutionParams& p)
{
    return json{{"c0", p.c0},
                {"i", p.i},
                {"mu", p.mu},
                {"alpha", p.alpha},
                {"beta", p.effective_beta()},
                {"delta", p.delta},
                {"epsilon", p.epsilon},
                {"dt", p.dt},
                {"band_radius", p.band_radius},
                {"max_iters", p.max_iters},
                {"stall_window", p.stall_window},
                {"osc_window", p.osc_window},
                {"edge_sigma", p.edge_sigma},
                {"edge_scale", p.edge_scale},
                {"tie_sign", p.tie_sign},
                {"cfl", p.cfl},
                {"grad_floor", p.grad_floor},
                {"use_ed", p.use_ed},
                {"signed_coefficient", p.signed_coefficient}};
}

json to_json(const Config& c)
{
    json j = to_json(c.params);
    j["window"] = c.window;
    j["centroid_dist"] = c.match.centroid_dist;
    j["fa_all_false_pixels"] = c.match.all_false_pixels;
    j["workers"] = c.workers;
    j["seed"] = c.seed;
    j["fa_scale"] = c.fa_scale;
    j["disable_ed"] = c.disable_ed;
    j["disable_signed_coeff"] = c.disable_signed_coeff;
    j["vanilla_init"] = c.vanilla_init;
    j["vanilla_half"] = c.vanilla_half;
    return j;
}

json to_json(const BatchReport& r)
{
    json entries = json::array();
    for (const auto& e : r.entries) {
        json j{{"image_id", e.image_id},
               {"x", e.x},
               {"y", e.y},
               {"status", e.ok ? "ok" : "error"},
               {"iterations", e.iterations},
               {"converged", e.converged},
               {"oscillating", e.oscillating}};
        if (!e.ok)
            j["error"] = e.error;
        entries.push_back(std::move(j));
    }
    return json{{"entries", entries}, {"written", r.written}, {"elapsed_ms", r.elapsed_ms}};
}

json to_json(const MetricReport& r, double fa_scale)
{
    json rows = json::array();
    for (const auto& row : r.per_image)
        rows.push_back({{"image_id", row.image_id},
                        {"iou", row.iou},
                        {"detected", row.detected},
                        {"gt_targets", row.gt_targets},
                        {"false_pixels", row.false_pixels}});
    return json{{"mean_iou", r.mean_iou},     {"pd", r.pd},
                {"fa", r.fa},                 {"fa_scaled", r.fa * fa_scale},
                {"fa_scale", fa_scale},       {"per_image", rows},
                {"unmatched", r.unmatched},   {"errors", r.errors}};
}

Config load_config(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    json doc;
    try {
        doc = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
    Config c;
    apply_json(c, doc);
    return c;
}

}  // namespace clickmask
