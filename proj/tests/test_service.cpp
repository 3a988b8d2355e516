#include <doctest.h>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include "clickmask/annotate.hpp"
#include "clickmask/archive.hpp"
#include "clickmask/codec.hpp"
#include "clickmask/service.hpp"
#include "clickmask/synth.hpp"
#include "scratch_dir.hpp"

using namespace clickmask;
using nlohmann::json;

namespace {

synth::Phantom scene(std::uint64_t seed)
{
    synth::PhantomSpec spec;
    spec.width = spec.height = 96;
    spec.background = 0.1;
    spec.noise_sigma = 0.02;
    spec.seed = seed;
    spec.targets.push_back({48, 48, 4, 0.8, synth::Profile::disk});
    return synth::generate(spec);
}

struct Fixture {
    testutil::ScratchDir dir{"svc"};
    std::filesystem::path images = dir / "images";
    std::filesystem::path session_dir = dir / "session";
    synth::Phantom a = scene(1), b = scene(2);

    Fixture()
    {
        std::filesystem::create_directories(images);
        save_image(a.image, images / "a.png");
        save_image(b.image, images / "b.png");
        save_image(GrayImage(40, 30, 0.05), images / "dark.png");
    }
};

// In-process server on an OS-chosen port.
class Running {
public:
    Running(Session& session, const Config& config, std::optional<std::filesystem::path> static_dir = {})
    {
        install_routes(server_, session, config, static_dir);
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~Running()
    {
        server_.stop();
        thread_.join();
    }
    httplib::Client client() const
    {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(30, 0);
        return c;
    }
    int port() const { return port_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

json post_json(httplib::Client& c, const std::string& path, const json& body, int expect)
{
    const auto res = c.Post(path, body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == expect);
    return res->body.empty() || res->get_header_value("Content-Type") != "application/json"
               ? json{}
               : json::parse(res->body);
}

}  // namespace

TEST_CASE("catalog and read endpoints")
{
    Fixture f;
    Session session(f.images, f.session_dir, EvolutionParams{});
    Running srv(session, Config{});
    auto c = srv.client();

    const auto health = c.Get("/healthz");
    REQUIRE(health);
    CHECK(health->status == 200);

    const auto list = c.Get("/images");
    REQUIRE(list);
    const json doc = json::parse(list->body);
    REQUIRE(doc["images"].size() == 3);
    CHECK(doc["images"][0]["image_id"] == "a");
    CHECK(doc["images"][2]["image_id"] == "dark");
    CHECK(doc["images"][0]["annotated"] == false);
    CHECK(c.Get("/images")->body == list->body);

    const auto img = c.Get("/images/a");
    REQUIRE(img);
    CHECK(img->status == 200);
    const auto file = read_file_bytes(f.images / "a.png");
    CHECK(img->body == std::string(file.begin(), file.end()));
    CHECK(c.Get("/images/zzz")->status == 404);
    CHECK(c.Get("/images/a/mask")->status == 404);
    CHECK(c.Get("/images/zzz/mask")->status == 404);
    CHECK(session.revision() == 0);
}

TEST_CASE("empty image directory gives an empty catalog")
{
    testutil::ScratchDir d("svc");
    std::filesystem::create_directories(d / "img");
    Session session(d / "img", d / "s", EvolutionParams{});
    Running srv(session, Config{});
    auto c = srv.client();
    CHECK(json::parse(c.Get("/images")->body) == json::parse(R"({"images": []})"));
}

TEST_CASE("annotate endpoint statuses and purity")
{
    Fixture f;
    Session session(f.images, f.session_dir, EvolutionParams{});
    Config config;
    config.window = 64;
    Running srv(session, config);
    auto c = srv.client();

    const json ok = post_json(c, "/annotate", {{"image_id", "a"}, {"x", 48}, {"y", 48}}, 200);
    CHECK((ok["converged"] == true || ok["oscillating"] == true));
    CHECK(ok["roi"] == json{{"left", 16}, {"top", 16}, {"width", 64}, {"height", 64}});
    const BinaryMask m = mask_from_json(ok["mask"]);
    const BinaryMask direct = annotate(f.a.image, {"a", 48, 48}, EvolutionParams{}, 64).mask;
    CHECK(m == direct);
    CHECK(mask_from_json(json{{"png", ok["mask"]["png"]}}) == direct);
    CHECK(ok["c1"].get<double>() > ok["c2"].get<double>());

    const json again = post_json(c, "/annotate", {{"image_id", "a"}, {"x", 48}, {"y", 48}}, 200);
    CHECK(again["mask"] == ok["mask"]);

    post_json(c, "/annotate", {{"image_id", "a"}, {"x", -1}, {"y", 5}}, 422);
    post_json(c, "/annotate", {{"image_id", "a"}, {"x", 96}, {"y", 5}}, 422);
    post_json(c, "/annotate", {{"image_id", "a"}, {"x", "1"}, {"y", 5}}, 422);
    const json bad = post_json(c, "/annotate",
                               {{"image_id", "a"}, {"x", 48}, {"y", 48}, {"params", {{"mu", 0.3}}}}, 422);
    CHECK(bad["error"] == "mu*dt must be < 0.25");
    post_json(c, "/annotate", {{"image_id", "a"}, {"x", 48}, {"y", 48}, {"params", {{"nope", 1}}}}, 422);
    post_json(c, "/annotate", {{"image_id", "zzz"}, {"x", 1}, {"y", 1}}, 404);

    const json seed = post_json(c, "/annotate", {{"image_id", "dark"}, {"x", 10}, {"y", 10}}, 409);
    CHECK(seed["kind"] == "NoSeedPixels");
    CHECK(seed["roi"] == json{{"left", 0}, {"top", 0}, {"width", 40}, {"height", 30}});

    const auto garbage = c.Post("/annotate", "{not json", "application/json");
    REQUIRE(garbage);
    CHECK(garbage->status == 400);

    // Override reaches the evolution.
    const json tight = post_json(c, "/annotate",
                                 {{"image_id", "a"}, {"x", 48}, {"y", 48}, {"params", {{"max_iters", 0}}}}, 200);
    CHECK(tight["iterations"] == 0);

    CHECK(session.revision() == 0);
    for (const auto& e : session.catalog())
        CHECK(!e.annotated);
}

TEST_CASE("accept, clear, export and restart")
{
    Fixture f;
    const BinaryMask ma = annotate(f.a.image, {"a", 48, 48}, EvolutionParams{}, 64).mask;
    const BinaryMask mb = f.b.gt;
    std::vector<std::uint8_t> first_export;
    {
        Session session(f.images, f.session_dir, EvolutionParams{});
        Running srv(session, Config{});
        auto c = srv.client();

        const auto before = c.Get("/export");
        REQUIRE(before);
        const auto empty = read_zip({before->body.begin(), before->body.end()});
        REQUIRE(empty.size() == 2);
        CHECK(empty[0].name == "params.json");
        CHECK(empty[1].name == "clicks.csv");
        CHECK(std::string(empty[1].data.begin(), empty[1].data.end()) == "image_id,x,y\n");

        const json r1 = post_json(c, "/images/a/accept",
                                  {{"mask", mask_to_json(BinaryMask(96, 96))}, {"click", {{"x", 1}, {"y", 2}}}}, 200);
        const json r2 =
            post_json(c, "/images/a/accept", {{"mask", mask_to_json(ma)}, {"click", {{"x", 48}, {"y", 48}}}}, 200);
        CHECK(r2["revision"].get<int>() == r1["revision"].get<int>() + 1);
        CHECK(r2["revision"] == 2);
        const auto got = c.Get("/images/a/mask");
        REQUIRE(got);
        CHECK(got->status == 200);
        const auto png = encode_mask_png(ma);
        CHECK(got->body == std::string(png.begin(), png.end()));

        post_json(c, "/images/b/accept", {{"mask", {{"png", base64_encode(encode_mask_png(mb))}}}}, 200);
        post_json(c, "/images/b/accept", {{"mask", mask_to_json(BinaryMask(5, 5))}}, 422);
        post_json(c, "/images/zzz/accept", {{"mask", mask_to_json(ma)}}, 404);
        post_json(c, "/images/a/accept", {{"nomask", 1}}, 422);
        CHECK(session.revision() == 3);

        const json list = json::parse(c.Get("/images")->body);
        CHECK(list["images"][0]["annotated"] == true);
        CHECK(list["images"][1]["annotated"] == true);
        CHECK(list["images"][2]["annotated"] == false);

        const auto e1 = c.Get("/export");
        const auto e2 = c.Get("/export");
        CHECK(e1->body == e2->body);
        first_export.assign(e1->body.begin(), e1->body.end());
        const auto members = read_zip(first_export);
        REQUIRE(members.size() == 4);
        CHECK(members[2].name == "masks/a.png");
        CHECK(members[3].name == "masks/b.png");
        CHECK(members[2].data == png);
        CHECK(std::string(members[1].data.begin(), members[1].data.end()) == "image_id,x,y\na,48,48\n");
        CHECK(session.revision() == 3);
    }
    {
        // Restart: the accepted masks come back from disk.
        Session session(f.images, f.session_dir, EvolutionParams{});
        CHECK(session.revision() == 3);
        REQUIRE(session.mask("a"));
        CHECK(*session.mask("a") == ma);
        CHECK(*session.mask("b") == mb);
        CHECK(session.export_archive() == first_export);

        Running srv(session, Config{});
        auto c = srv.client();
        const json cleared = post_json(c, "/images/a/clear", json::object(), 200);
        CHECK(cleared["revision"] == 4);
        CHECK(c.Get("/images/a/mask")->status == 404);
        post_json(c, "/images/zzz/clear", json::object(), 404);
    }
    Session reloaded(f.images, f.session_dir, EvolutionParams{});
    CHECK(!reloaded.mask("a"));
    CHECK(reloaded.mask("b"));
}

TEST_CASE("static directory is served at the root")
{
    Fixture f;
    std::filesystem::create_directories(f.dir / "web");
    std::ofstream(f.dir / "web" / "index.html") << "<html>hi</html>";
    Session session(f.images, f.session_dir, EvolutionParams{});
    Running srv(session, Config{}, f.dir / "web");
    auto c = srv.client();
    const auto page = c.Get("/index.html");
    REQUIRE(page);
    CHECK(page->status == 200);
    CHECK(page->body == "<html>hi</html>");
    const auto root = c.Get("/");
    REQUIRE(root);
    CHECK(root->body == "<html>hi</html>");
    CHECK(c.Get("/healthz")->status == 200);
}

#ifdef CLICKMASK_CLI_PATH

namespace {

struct Child {
    pid_t pid = -1;
    FILE* out = nullptr;
};

// Starts the tool with stdout on a pipe.
Child spawn(const std::vector<std::string>& args)
{
    int fds[2];
    REQUIRE(::pipe(fds) == 0);
    const pid_t pid = ::fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
        ::dup2(fds[1], 1);
        ::close(fds[0]);
        ::close(fds[1]);
        std::vector<char*> argv;
        std::string path = CLICKMASK_CLI_PATH;
        argv.push_back(path.data());
        std::vector<std::string> copy = args;
        for (auto& a : copy)
            argv.push_back(a.data());
        argv.push_back(nullptr);
        ::execv(path.c_str(), argv.data());
        ::_exit(127);
    }
    ::close(fds[1]);
    return {pid, ::fdopen(fds[0], "r")};
}

int wait_exit(pid_t pid)
{
    int status = 0;
    for (int k = 0; k < 200; ++k) {
        if (::waitpid(pid, &status, WNOHANG) == pid)
            return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    return -2;
}

}  // namespace

TEST_CASE("serve persists on SIGINT and rejects an occupied port")
{
    Fixture f;
    Child child = spawn({"serve", "--images", f.images.string(), "--session", f.session_dir.string(), "--port", "0"});
    char line[512] = {};
    REQUIRE(std::fgets(line, sizeof line, child.out));
    const std::string banner = line;
    const auto colon = banner.rfind(':');
    REQUIRE(colon != std::string::npos);
    const int port = std::stoi(banner.substr(colon + 1));
    REQUIRE(port > 0);

    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30, 0);
    const auto health = c.Get("/healthz");
    REQUIRE(health);
    CHECK(health->status == 200);
    const BinaryMask m = f.a.gt;
    post_json(c, "/images/a/accept", {{"mask", mask_to_json(m)}}, 200);

    Child clash = spawn({"serve", "--images", f.images.string(), "--session", (f.dir / "s2").string(), "--port",
                         std::to_string(port)});
    CHECK(wait_exit(clash.pid) == 1);
    std::fclose(clash.out);

    ::kill(child.pid, SIGINT);
    CHECK(wait_exit(child.pid) == 0);
    std::fclose(child.out);

    CHECK(load_mask(f.session_dir / "masks" / "a.png") == m);
    const auto manifest = read_file_bytes(f.session_dir / "manifest.json");
    const json doc = json::parse(std::string(manifest.begin(), manifest.end()));
    CHECK(doc["accepted"].contains("a"));
    Session reloaded(f.images, f.session_dir, EvolutionParams{});
    CHECK(*reloaded.mask("a") == m);
}

#endif
