#include "clickmask/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <ctime>
#include <fstream>
#include <functional>
#include <optional>
#include <thread>

#include "clickmask/ablation.hpp"
#include "clickmask/annotate.hpp"
#include "clickmask/config.hpp"
#include "clickmask/service.hpp"
#include "clickmask/synth.hpp"

namespace clickmask {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Flags overriding Config fields. Each is applied only when given, after the
// config file has been read.
struct Overrides {
    std::vector<std::function<void(Config&)>> apply;

    template <typename T>
    void add(CLI::App& app, const std::string& flag, const std::string& help, std::function<void(Config&, T)> set)
    {
        auto value = std::make_shared<T>();
        CLI::Option* opt = app.add_option(flag, *value, help);
        apply.push_back([opt, value, set](Config& c) {
            if (opt->count() > 0)
                set(c, *value);
        });
    }

    void flag(CLI::App& app, const std::string& name, const std::string& help, std::function<void(Config&)> set)
    {
        CLI::Option* opt = app.add_flag(name, help);
        apply.push_back([opt, set](Config& c) {
            if (opt->count() > 0)
                set(c);
        });
    }
};

void add_param_flags(CLI::App& app, Overrides& o)
{
    using P = EvolutionParams;
    auto real = [&](const std::string& flag, double P::*f, const std::string& help) {
        o.add<double>(app, flag, help, [f](Config& c, double v) { c.params.*f = v; });
    };
    auto whole = [&](const std::string& flag, int P::*f, const std::string& help) {
        o.add<int>(app, flag, help, [f](Config& c, int v) { c.params.*f = v; });
    };
    real("--c0", &P::c0, "level-set plateau magnitude");
    real("--threshold", &P::i, "seed threshold i on normalized intensity");
    real("--mu", &P::mu, "regularization weight");
    real("--alpha", &P::alpha, "area weight");
    o.add<double>(app, "--beta", "ED weight (default 10*delta)", [](Config& c, double v) { c.params.beta = v; });
    real("--delta", &P::delta, "ED floor");
    real("--epsilon", &P::epsilon, "Heaviside/Dirac width");
    real("--dt", &P::dt, "time step");
    real("--edge-sigma", &P::edge_sigma, "edge indicator pre-smoothing");
    real("--edge-scale", &P::edge_scale, "edge indicator intensity scale");
    whole("--band-radius", &P::band_radius, "exterior band width in pixels");
    whole("--max-iters", &P::max_iters, "iteration budget");
    whole("--stall-window", &P::stall_window, "unchanged iterations for convergence");
    whole("--osc-window", &P::osc_window, "mask history length for cycle detection");
    whole("--tie-sign", &P::tie_sign, "area sign when c1 equals its running maximum (-1, 0, 1)");
    o.add<int>(app, "--window", "ROI side in pixels", [](Config& c, int v) { c.window = v; });
    o.flag(app, "--disable-ed", "drop the ED term", [](Config& c) { c.disable_ed = true; });
    o.flag(app, "--disable-signed-coeff", "fix the area sign at +1",
           [](Config& c) { c.disable_signed_coeff = true; });
    o.flag(app, "--vanilla-init", "seed a square around the click", [](Config& c) { c.vanilla_init = true; });
}

void write_text(const fs::path& path, const std::string& text)
{
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int serve(const Config& config, const std::string& host, int port, const fs::path& images, const fs::path& session_dir,
          const std::optional<fs::path>& static_dir, std::ostream& out, std::ostream& err)
{
    Session session(images, session_dir, config.effective_params());
    httplib::Server server;
    server.new_task_queue = [n = config.workers] { return new httplib::ThreadPool(std::max(2, n + 1)); };
    install_routes(server, session, config, static_dir);
    // SO_REUSEADDR only: the library default also sets SO_REUSEPORT, which
    // would let a second server share an occupied port.
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
    });

    // Port 0 asks the OS for a free port; the one chosen is printed below.
    const int requested = port;
    if (port == 0)
        port = server.bind_to_any_port(host);
    else if (!server.bind_to_port(host, port))
        port = -1;
    if (port <= 0) {
        err << "error: cannot listen on " << host << ":" << requested << " (port in use or not permitted)\n";
        return exit_failure;
    }

    // SIGINT / SIGTERM are handled on a dedicated thread via sigtimedwait.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    sigset_t old;
    pthread_sigmask(SIG_BLOCK, &set, &old);
    std::atomic<bool> done{false};
    std::thread watcher([&] {
        const timespec tick{0, 200'000'000};
        while (!done) {
            if (sigtimedwait(&set, nullptr, &tick) > 0) {
                server.stop();
                return;
            }
        }
    });

    out << "serving " << session.catalog().size() << " images on http://" << host << ":" << port << "\n"
        << std::flush;
    const bool ok = server.listen_after_bind();
    done = true;
    watcher.join();
    pthread_sigmask(SIG_SETMASK, &old, nullptr);
    out << "session saved at revision " << session.revision() << "\n";
    return ok ? exit_ok : exit_failure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Click-driven level-set pseudo-mask annotation for infrared small targets", "clickmask"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    bool verbose = false, as_json = false;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_flag("--verbose,-v", verbose, "echo the effective config to stderr");
    app.add_flag("--json", as_json, "machine-readable output");
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "random seed");

    Overrides overrides;

    // annotate
    auto* annotate_cmd = app.add_subcommand("annotate", "turn a click file into pseudo-masks");
    std::string clicks_path, images_dir, out_dir, report_path;
    bool strict = false;
    annotate_cmd->add_option("--clicks", clicks_path, "CSV or JSON click file")->required();
    annotate_cmd->add_option("--images", images_dir, "image directory")->required();
    annotate_cmd->add_option("--out", out_dir, "mask output directory")->required();
    annotate_cmd->add_option("--report", report_path, "write the JSON batch report here");
    annotate_cmd->add_flag("--strict", strict, "exit 1 if any click fails");
    add_param_flags(*annotate_cmd, overrides);

    // evaluate
    auto* evaluate_cmd = app.add_subcommand("evaluate", "IoU / Pd / Fa of predicted masks against ground truth");
    std::string pred_dir, gt_dir, eval_out;
    evaluate_cmd->add_option("--pred", pred_dir, "predicted mask directory")->required();
    evaluate_cmd->add_option("--gt", gt_dir, "ground-truth mask directory")->required();
    evaluate_cmd->add_option("--out", eval_out, "also write the JSON report here");
    overrides.add<double>(*evaluate_cmd, "--fa-scale", "Fa reporting multiplier",
                          [](Config& c, double v) { c.fa_scale = v; });
    overrides.add<double>(*evaluate_cmd, "--centroid-dist", "match radius in pixels",
                          [](Config& c, double v) { c.match.centroid_dist = v; });
    overrides.flag(*evaluate_cmd, "--fa-all-false-pixels", "count every false pixel in Fa",
                   [](Config& c) { c.match.all_false_pixels = true; });

    // ablation
    auto* ablation_cmd = app.add_subcommand("ablation", "run the four-row ablation ladder on a corpus");
    std::string corpus_dir;
    ablation_cmd->add_option("--corpus", corpus_dir, "directory with images/, gt/ and clicks.csv")->required();
    add_param_flags(*ablation_cmd, overrides);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
    synth::CorpusSpec cs;
    std::string synth_out, profile = "disk";
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--n", cs.n, "number of scenes")->capture_default_str();
    synth_cmd->add_option("--width", cs.width)->capture_default_str();
    synth_cmd->add_option("--height", cs.height)->capture_default_str();
    synth_cmd->add_option("--background", cs.background)->capture_default_str();
    synth_cmd->add_option("--clutter", cs.clutter)->capture_default_str();
    synth_cmd->add_option("--clutter-modes", cs.clutter_modes)->capture_default_str();
    synth_cmd->add_option("--noise", cs.noise_sigma)->capture_default_str();
    synth_cmd->add_option("--min-targets", cs.min_targets)->capture_default_str();
    synth_cmd->add_option("--max-targets", cs.max_targets)->capture_default_str();
    synth_cmd->add_option("--min-radius", cs.min_radius)->capture_default_str();
    synth_cmd->add_option("--max-radius", cs.max_radius)->capture_default_str();
    synth_cmd->add_option("--min-peak", cs.min_peak)->capture_default_str();
    synth_cmd->add_option("--max-peak", cs.max_peak)->capture_default_str();
    synth_cmd->add_option("--profile", profile)->check(CLI::IsMember({"disk", "gaussian"}))->capture_default_str();

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "run the annotation HTTP service");
    std::string serve_images, session_dir, host = "127.0.0.1", static_dir;
    int port = 8080;
    serve_cmd->add_option("--images", serve_images, "image directory")->required();
    serve_cmd->add_option("--session", session_dir, "session directory (created if missing)")->required();
    serve_cmd->add_option("--port", port)->capture_default_str();
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--static", static_dir, "directory served at /");
    add_param_flags(*serve_cmd, overrides);

    std::vector<std::string> argv_rest(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(std::move(argv_rest));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    Config config;
    try {
        if (!config_path.empty())
            config = load_config(config_path);
        // Each subcommand registers its own copies of shared flags; only the
        // parsed subcommand's ones have a count.
        for (auto& f : overrides.apply)
            f(config);
        if (workers)
            config.workers = *workers;
        if (seed)
            config.seed = *seed;
        config.validate();
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
    if (verbose)
        err << "effective config: " << to_json(config).dump(2) << "\n";

    try {
        if (annotate_cmd->parsed()) {
            const auto clicks = read_clicks(clicks_path);
            if (!fs::is_directory(images_dir))
                throw IoError("images directory not found: " + images_dir);
            const BatchReport report = batch_annotate(clicks, images_dir, out_dir, config.effective_params(),
                                                      config.annotate_options(), config.workers);
            const json j = to_json(report);
            if (!report_path.empty())
                write_text(report_path, j.dump(2) + "\n");
            if (as_json) {
                out << j.dump(2) << "\n";
            } else {
                out << report.entries.size() << " clicks, " << report.failures() << " failed, "
                    << report.written.size() << " masks written to " << out_dir << " in " << report.elapsed_ms
                    << " ms\n";
                for (const auto& e : report.entries)
                    if (!e.ok)
                        out << "  " << e.image_id << " (" << e.x << "," << e.y << "): " << e.error << "\n";
            }
            return strict && report.failures() > 0 ? exit_failure : exit_ok;
        }

        if (evaluate_cmd->parsed()) {
            for (const auto& d : {pred_dir, gt_dir})
                if (!fs::is_directory(d))
                    throw IoError("not a directory: " + d);
            const MetricReport report = evaluate_corpus(pred_dir, gt_dir, config.match);
            const json j = to_json(report, config.fa_scale);
            if (!eval_out.empty())
                write_text(eval_out, j.dump(2) + "\n");
            if (as_json) {
                out << j.dump(2) << "\n";
            } else {
                out << format_table(report, config.fa_scale);
                for (const auto& u : report.unmatched)
                    out << "unmatched: " << u << "\n";
                for (const auto& e : report.errors)
                    out << "error: " << e << "\n";
            }
            return exit_ok;
        }

        if (ablation_cmd->parsed()) {
            const auto scenes = load_scenes(corpus_dir);
            const auto rows = run_ablation(config, scenes);
            if (as_json) {
                json j = json::array();
                for (const auto& r : rows)
                    j.push_back({{"variant", r.variant},
                                 {"mean_iou", r.mean_iou},
                                 {"images", r.images},
                                 {"failed_clicks", r.failed_clicks}});
                out << j.dump(2) << "\n";
            } else {
                out << format_ablation(rows);
            }
            return exit_ok;
        }

        if (synth_cmd->parsed()) {
            cs.seed = config.seed;
            cs.profile = profile == "gaussian" ? synth::Profile::gaussian : synth::Profile::disk;
            try {
                cs.validate();
            } catch (const std::invalid_argument& e) {
                err << "error: " << e.what() << "\n";
                return exit_usage;
            }
            const auto corpus = synth::generate_corpus(cs, synth_out);
            if (as_json)
                out << json{{"scenes", corpus.size()}, {"out", synth_out}, {"seed", cs.seed}}.dump(2) << "\n";
            else
                out << corpus.size() << " scenes written to " << synth_out << "\n";
            return exit_ok;
        }

        if (serve_cmd->parsed())
            return serve(config, host, port, serve_images, session_dir,
                         static_dir.empty() ? std::nullopt : std::optional<fs::path>(static_dir), out, err);
    } catch (const ClickFileError& e) {
        err << "error: " << clicks_path << ": " << e.what() << "\n";
        return exit_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_usage;
}

}  // namespace clickmask
