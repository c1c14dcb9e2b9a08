#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "geoctx/commands.hpp"
#include "geoctx/error.hpp"
#include "geoctx/io.hpp"
#include "geoctx/net.hpp"
#include "geoctx/settings.hpp"
#include "warnings.hpp"

using namespace geoctx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Settings settings(std::initializer_list<std::pair<const char *, std::string>> kv) {
    Settings s;
    for (const auto &[k, v] : kv) s.set(k, v);
    return s;
}

// One small synthetic benchmark shared by the pipeline tests.
struct World {
    fs::path root = fs::temp_directory_path() / "geoctx_test_commands";
    std::string data, all_cache, gps_cache;
    std::ostringstream log;

    World() {
        fs::remove_all(root);
        fs::create_directories(root);
        data = (root / "data").string();
        cmd_synth(settings({{"out", data}, {"seed", "3"}, {"synth.train", "400"}, {"synth.test", "100"},
                            {"synth.tags_per_class", "20"}, {"synth.concept_images", "300"},
                            {"synth.map_rows", "32"}, {"synth.map_cols", "64"}, {"synth.zips", "40"}}),
                  log);
        all_cache = (root / "all.gfc").string();
        cmd_extract(extract_settings("gps,map,acs,hashtag,visual", all_cache), log);
        gps_cache = (root / "gps.gfc").string();
        Settings g = extract_settings("gps", gps_cache);
        g.set("gps.rows", "10");
        g.set("gps.cols", "20");
        cmd_extract(g, log);
    }
    ~World() { fs::remove_all(root); }

    Settings extract_settings(const std::string &features, const std::string &out) const {
        return settings({{"records", data + "/records.jsonl"},
                         {"out", out},
                         {"features", features},
                         {"corpus", data + "/corpus.jsonl"},
                         {"concepts", data + "/concepts.jsonl"},
                         {"maps", data + "/maps"},
                         {"zips", data + "/zips.csv"},
                         {"classes", "20"},
                         {"threads", "1"}});
    }
    std::string path(const std::string &f) const { return (root / f).string(); }
};

World &world() {
    static World w;
    return w;
}

Settings train_settings(const std::string &cache, const std::string &out, const std::string &features,
                        const std::string &replicas = "0") {
    return settings({{"cache", cache}, {"out", out}, {"seed", "1"}, {"features", features},
                     {"replicas", replicas}, {"epochs", "4"}, {"batch", "32"}, {"lr_step", "2"}});
}

int run_cli(const std::string &args, std::string &output) {
    const std::string capture = (fs::temp_directory_path() / "geoctx_cli_output.txt").string();
    const std::string cmd = std::string(GEOCTX_CLI) + " " + args + " > " + capture + " 2>&1";
    const int status = std::system(cmd.c_str());
    output = slurp(capture);
    fs::remove(capture);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("synth writes every artifact and a manifest") {
    World &w = world();
    for (const char *f : {"records.jsonl", "corpus.jsonl", "concepts.jsonl", "zips.csv", "synth.json",
                          "manifest.json", "maps/map_00.georaster", "maps/map_09.georaster"}) {
        INFO(f);
        CHECK(fs::exists(fs::path(w.data) / f));
    }
    const auto m = nlohmann::json::parse(slurp(w.data + "/manifest.json"));
    CHECK(m["command"] == "synth");
    CHECK(m["settings"]["seed"] == "3");
    CHECK(nlohmann::json::parse(slurp(w.data + "/synth.json"))["sensitive_classes"].size() == 15);
}

TEST_CASE("extract records feature dimensions and is reproducible") {
    World &w = world();
    const auto m = nlohmann::json::parse(slurp(w.gps_cache + ".manifest.json"));
    std::map<std::string, std::size_t> dims;
    for (const auto &f : m["cache"]["features"]) dims[f["name"].get<std::string>()] = f["dim"].get<std::size_t>();
    CHECK(dims == std::map<std::string, std::size_t>{{"image", 32}, {"gps", 200}});

    const FeatureCache all = load_feature_cache(w.all_cache);
    CHECK(all.records.size() == 500);
    CHECK(all.classes == 20);
    CHECK(all.dims.at("gps") == 20000);
    CHECK(all.dims.at("map") == 8670);
    CHECK(all.dims.at("acs") == 16);
    CHECK(all.dims.at("hashtag") == 2 * 20 * 10);  // hashtag keys are the class ids
    CHECK(all.dims.at("visual") == 2 * 16 * 10);

    const std::string again = w.path("again.gfc");
    std::ostringstream log;
    Settings g = w.extract_settings("gps", again);
    g.set("gps.rows", "10");
    g.set("gps.cols", "20");
    g.set("threads", "3");  // thread count must not change the bytes
    cmd_extract(g, log);
    const FeatureCache a = load_feature_cache(again), b = load_feature_cache(w.gps_cache);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].id == b.records[i].id);
        CHECK(a.records[i].bundle == b.records[i].bundle);
    }
}

TEST_CASE("extract reports resource problems") {
    World &w = world();
    std::ostringstream log;
    Settings s = w.extract_settings("map", w.path("x.gfc"));
    s.set("maps", w.path("nowhere"));
    CHECK_THROWS(cmd_extract(s, log));
    Settings t = w.extract_settings("bogus", w.path("x.gfc"));
    CHECK_THROWS_AS(cmd_extract(t, log), Error);
    Settings u = w.extract_settings("hashtag", w.path("x.gfc"));
    u.set("records", w.path("missing.jsonl"));
    CHECK_THROWS_AS(cmd_extract(u, log), IoError);
}

TEST_CASE("train, eval, predict and radii through the command layer") {
    World &w = world();
    std::ostringstream log;
    const std::string out = w.path("rl");
    const auto m = cmd_train(train_settings(w.all_cache, out, "hashtag", "5"), log);
    CHECK(m["model"] == "Image + Hashtag -/- RL5");
    for (const char *f : {"model.ckpt", "loss.csv", "radii.csv", "manifest.json"}) CHECK(fs::exists(fs::path(out) / f));
    CHECK(slurp(out + "/loss.csv").rfind("epoch,loss,lr\n", 0) == 0);

    const Network net = load_checkpoint(out + "/model.ckpt");
    for (const auto &layer : net.radius_layers()) {
        for (double r : layer.rho) {
            CHECK(r >= 1000.0);
            CHECK(r <= 10000.0);
        }
    }

    const auto e = cmd_eval(settings({{"cache", w.all_cache}, {"model", out + "/model.ckpt"},
                                      {"out", w.path("rl_metrics.csv")}}),
                            log);
    const double map = e["mean_ap"].get<double>();
    CHECK(map > 0.0);
    CHECK(map <= 1.0);
    const std::string metrics = slurp(w.path("rl_metrics.csv"));
    CHECK(metrics.rfind("class,ap,acc1,acc5,n_test\n", 0) == 0);
    CHECK(metrics.find("\nmean,") != std::string::npos);

    cmd_predict(settings({{"cache", w.all_cache}, {"model", out + "/model.ckpt"}, {"out", w.path("pred.csv")}}),
                log);
    const std::string pred = slurp(w.path("pred.csv"));
    CHECK(std::count(pred.begin(), pred.end(), '\n') == 101);

    cmd_radii(settings({{"cache", w.all_cache}, {"model", out + "/model.ckpt"}, {"out", w.path("radii.csv")}}),
              log);
    CHECK(slurp(w.path("radii.csv")).rfind("feature,key,block,mean_m,min_m,max_m,radii_m\n", 0) == 0);

    // radii needs a radius learning model
    cmd_train(train_settings(w.all_cache, w.path("img"), "image"), log);
    CHECK_THROWS_AS(cmd_radii(settings({{"cache", w.all_cache}, {"model", w.path("img/model.ckpt")},
                                        {"out", w.path("r2.csv")}}),
                              log),
                    ConfigError);
}

TEST_CASE("training is reproducible for a fixed seed") {
    World &w = world();
    std::ostringstream log;
    cmd_train(train_settings(w.all_cache, w.path("det_a"), "gps,hashtag", "0"), log);
    cmd_train(train_settings(w.all_cache, w.path("det_b"), "gps,hashtag", "0"), log);
    CHECK(slurp(w.path("det_a/model.ckpt")) == slurp(w.path("det_b/model.ckpt")));
    CHECK(slurp(w.path("det_a/loss.csv")) == slurp(w.path("det_b/loss.csv")));
    auto ma = nlohmann::json::parse(slurp(w.path("det_a/manifest.json")));
    auto mb = nlohmann::json::parse(slurp(w.path("det_b/manifest.json")));
    ma["settings"].erase("out");
    mb["settings"].erase("out");
    CHECK(ma == mb);
    Settings other = train_settings(w.all_cache, w.path("det_c"), "gps,hashtag", "0");
    other.set("seed", "2");
    cmd_train(other, log);
    CHECK(slurp(w.path("det_a/model.ckpt")) != slurp(w.path("det_c/model.ckpt")));
}

TEST_CASE("training settings are validated") {
    World &w = world();
    std::ostringstream log;
    Settings s = train_settings(w.all_cache, w.path("bad"), "hashtag");
    s.set("lr", "-1");
    CHECK_THROWS_AS(cmd_train(s, log), ConfigError);
    Settings t = train_settings(w.gps_cache, w.path("bad"), "hashtag");
    CHECK_THROWS_AS(cmd_train(t, log), ConfigError);
    Settings u = train_settings(w.all_cache, w.path("bad"), "gps", "5");
    CHECK_THROWS_AS(cmd_train(u, log), ConfigError);
    Settings v = train_settings(w.all_cache, w.path("bad"), "hashtag");
    v.set("seed", "");
    CHECK_THROWS_AS(cmd_train(v, log), ConfigError);
}

TEST_CASE("baseline with a uniform prior reproduces the image-only model") {
    World &w = world();
    std::ostringstream log;
    Settings s = train_settings(w.all_cache, w.path("base"), "image");
    s.set("prior", "uniform");
    cmd_baseline(s, log);
    CHECK(slurp(w.path("base/metrics_image.csv")) == slurp(w.path("base/metrics_uniform.csv")));

    Settings all = train_settings(w.all_cache, w.path("base_all"), "image");
    all.set("corpus", w.data + "/corpus.jsonl");
    all.set("k", "5");
    WarningCapture warnings;
    cmd_baseline(all, log);
    const std::string summary = slurp(w.path("base_all/summary.csv"));
    CHECK(summary.rfind("method,mean_ap,acc1,acc5,n_test\n", 0) == 0);
    CHECK(summary.find("\nknn,") != std::string::npos);
    CHECK(summary.find("\nradius,") != std::string::npos);

    // corpus keys that are not classes are dropped with a warning
    write_corpus(w.path("mixed.jsonl"), {{{-100, 40}, 3}, {{-100, 40}, 99}});
    Settings mixed = s;
    mixed.set("out", w.path("base_mixed"));
    mixed.set("prior", "radius");
    mixed.set("corpus", w.path("mixed.jsonl"));
    const std::size_t before = warnings.seen().size();
    cmd_baseline(mixed, log);
    CHECK(warnings.seen().size() > before);
    mixed.set("model", w.path("base_all/none.ckpt"));
    CHECK_THROWS_AS(cmd_baseline(mixed, log), IoError);
    Settings bad = s;
    bad.set("prior", "magic");
    CHECK_THROWS_AS(cmd_baseline(bad, log), ConfigError);
}

TEST_CASE("select ranks classes from a keyed corpus") {
    World &w = world();
    std::ostringstream log;
    // one event per training record, keyed by its class
    std::vector<KeyedPoint> events;
    for (const GeoRecord &r : read_records(w.data + "/records.jsonl")) {
        events.push_back({r.point, static_cast<std::uint32_t>(*r.label)});
    }
    write_corpus(w.path("classes.jsonl"), events);
    cmd_select(settings({{"corpus", w.path("classes.jsonl")}, {"out", w.path("sel.csv")}, {"top_n", "5"}}), log);
    const std::string csv = slurp(w.path("sel.csv"));
    CHECK(csv.rfind("class,kl_nats,rank\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    CHECK(fs::exists(w.path("sel.csv.manifest.json")));

    cmd_select(settings({{"corpus", w.path("classes.jsonl")}, {"out", w.path("sel2.csv")}, {"threshold", "1e9"}}),
               log);
    CHECK(slurp(w.path("sel2.csv")) == "class,kl_nats,rank\n");
}

TEST_CASE("ablate trains each cell and skips radius learning without context") {
    World &w = world();
    std::ostringstream log;
    Settings s = train_settings(w.all_cache, w.path("abl"), "image");
    s.set("epochs", "2");
    s.set("ablate.features", "image,image+hashtag");
    s.set("ablate.replicas", "0,5");
    const auto m = cmd_ablate(s, log);
    REQUIRE(m["rows"].size() == 4);
    CHECK(m["rows"][1]["status"] == "no context feature");
    CHECK(m["rows"][3]["status"] == "ok");
    const std::string csv = slurp(w.path("abl/ablation.csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("a hand-built three-record instance") {
    const fs::path dir = fs::temp_directory_path() / "geoctx_test_hand";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<GeoRecord> recs{{"a", {-100.0, 40.0}, 0, {1.0, 0.0}, {}, "train"},
                                {"b", {-90.0, 35.0}, 1, {0.0, 1.0}, {}, "train"},
                                {"c", {-100.0, 40.0}, 0, {0.9, 0.1}, {}, "test"}};
    write_records((dir / "r.jsonl").string(), recs);
    // around (-100, 40): key 0 twice and key 1 once in place, key 1 again ~3 km north
    write_corpus((dir / "c.jsonl").string(),
                 {{{-100.0, 40.0}, 0}, {{-100.0, 40.0}, 0}, {{-100.0, 40.0}, 1}, {{-100.0, 40.027}, 1}});
    std::ostringstream log;
    cmd_extract(settings({{"records", (dir / "r.jsonl").string()}, {"out", (dir / "h.gfc").string()},
                          {"features", "hashtag"}, {"corpus", (dir / "c.jsonl").string()},
                          {"radii", "1000,5000"}}),
                log);
    const FeatureCache cache = load_feature_cache((dir / "h.gfc").string());
    CHECK(cache.classes == 2);
    const auto &v = cache.records[0].bundle.find(FeatureKind::Hashtag)->values;
    // [r=1km: a0 a1 w0 w1][r=5km: a0 a1 w0 w1]
    const std::vector<double> expect{2.0 / 3, 1.0 / 3, 1.0, 0.5, 0.5, 0.5, 1.0, 1.0};
    REQUIRE(v.size() == expect.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == doctest::Approx(expect[i]));
    // the far record sees nothing
    for (double x : cache.records[1].bundle.find(FeatureKind::Hashtag)->values) CHECK(x == 0.0);

    Settings t = train_settings((dir / "h.gfc").string(), (dir / "m").string(), "hashtag");
    t.set("epochs", "50");
    t.set("batch", "2");
    t.set("dropout", "0");
    cmd_train(t, log);
    const auto e = cmd_eval(settings({{"cache", (dir / "h.gfc").string()}, {"model", (dir / "m/model.ckpt").string()},
                                      {"out", (dir / "m.csv").string()}}),
                            log);
    CHECK(e["acc1"].get<double>() == 1.0);
    fs::remove_all(dir);
}

TEST_CASE("command-line front end: exit codes and error lines") {
    World &w = world();
    std::string out;
    CHECK(run_cli("", out) == 2);
    CHECK(out.rfind("error\tusage\t", 0) == 0);
    CHECK(run_cli("frobnicate", out) == 2);
    CHECK(run_cli("train --bogus 1", out) == 2);

    CHECK(run_cli("--help", out) == 0);
    CHECK(out.find("extract") != std::string::npos);

    CHECK(run_cli("train --cache " + w.all_cache + " --out " + w.path("cli_bad"), out) == 1);
    CHECK(out == "error\tconfig\tmissing required setting 'seed'\n");
    CHECK(run_cli("eval --cache " + w.path("none.gfc") + " --model x --out y", out) == 1);
    CHECK(out.rfind("error\tio\t", 0) == 0);
    CHECK(std::count(out.begin(), out.end(), '\n') == 1);

    // config file < --set < flags
    const std::string cfg = w.path("train.cfg");
    std::ofstream(cfg) << "cache = " << w.all_cache << "\nout = " << w.path("cli_cfg")
                       << "\nseed = 9\nepochs = 1\nfeatures = hashtag\nreplicas = 5\n";
    CHECK(run_cli("train --config " + cfg + " --set replicas=0 --set epochs=3 --epochs 2", out) == 0);
    const auto m = nlohmann::json::parse(slurp(w.path("cli_cfg/manifest.json")));
    CHECK(m["settings"]["epochs"] == "2");
    CHECK(m["settings"]["replicas"] == "0");
    CHECK(m["settings"]["seed"] == "9");
    CHECK(m["model"] == "Image + Hashtag -/-");
}
