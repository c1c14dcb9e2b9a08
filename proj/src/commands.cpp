#include "geoctx/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <thread>

#include "geoctx/baselines.hpp"
#include "geoctx/error.hpp"
#include "geoctx/selection.hpp"
#include "geoctx/synth.hpp"

namespace geoctx {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v, const char *spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string join_path(const std::string &dir, const std::string &name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

void ensure_parent(const std::string &file) {
    const fs::path parent = fs::path(file).parent_path();
    if (!parent.empty()) ensure_dir(parent.string());
}

json make_manifest(const std::string &command, const Settings &s, const std::vector<std::string> &outputs) {
    return {{"command", command}, {"settings", s.to_json()}, {"outputs", outputs}};
}

void write_manifest(const std::string &path, const json &manifest) {
    write_text_file(path, manifest.dump(2) + "\n");
}

std::size_t max_key_plus_one(const std::vector<KeyedPoint> &events) {
    std::size_t n = 0;
    for (const auto &e : events) n = std::max<std::size_t>(n, e.key + 1);
    return n;
}

}  // namespace

// ---------------------------------------------------------------------------

FeatureCache extract_features(const std::vector<GeoRecord> &records, const FeatureConfig &config,
                              const FeatureResources &resources, std::size_t classes, std::size_t threads) {
    check_resources(config, resources);
    FeatureCache cache;
    cache.classes = classes;
    cache.radii = config.radii;
    cache.dims = expected_dimensions(config, resources);
    if (config.hashtag) cache.key_counts["hashtag"] = resources.hashtag_count;
    if (config.visual) cache.key_counts["visual"] = resources.concept_count;
    cache.records.resize(records.size());

    const auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const GeoRecord &r = records[i];
            CachedRecord &out = cache.records[i];
            try {
                if (r.label && (*r.label < 0 || static_cast<std::size_t>(*r.label) >= classes)) {
                    throw InvalidArgument("label " + std::to_string(*r.label) + " outside [0, " +
                                          std::to_string(classes) + ")");
                }
                out.id = r.id;
                out.label = r.label;
                out.split = r.split;
                out.point = r.point;
                out.bundle = assemble(r, config, resources);
                for (const NamedFeature &f : out.bundle.features) {
                    if (!is_context_feature(f.kind)) continue;
                    const std::size_t keys = cache.key_counts.at(feature_name(f.kind));
                    out.banks.emplace_back(f.kind, HistFnBank::from_context_feature(f.values, config.radii, keys));
                }
            } catch (const Error &e) {
                throw Error(e.code(), "record " + r.id + ": " + e.what());
            }
        }
    };

    threads = std::max<std::size_t>(1, std::min(threads, records.size()));
    if (threads == 1) {
        run(0, records.size());
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        const std::size_t chunk = (records.size() + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(records.size(), t * chunk);
            const std::size_t end = std::min(records.size(), begin + chunk);
            pool.emplace_back([&, t, begin, end] {
                try {
                    run(begin, end);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto &th : pool) th.join();
        // Report the error of the earliest chunk so failures are reproducible.
        for (auto &e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    return cache;
}

std::string ModelSpec::name() const {
    std::string s;
    for (std::size_t i = 0; i < features.size(); ++i) {
        std::string n = feature_name(features[i]);
        n[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(n[0])));
        if (features[i] == FeatureKind::Gps || features[i] == FeatureKind::Acs) {
            for (char &c : n) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        }
        s += (i ? " + " : "") + n;
    }
    s += " " + (precat ? std::to_string(precat) : std::string("-")) + "/" +
         (postcat ? std::to_string(postcat) : std::string("-"));
    if (replicas) s += " RL" + std::to_string(replicas);
    return s;
}

ModelSpec model_spec_from(const Settings &s, const FeatureCache &cache) {
    ModelSpec spec;
    spec.features.push_back(FeatureKind::Image);
    std::vector<std::string> names;
    for (FeatureKind k : kAllFeatureKinds) {
        if (k != FeatureKind::Image && cache.dims.count(feature_name(k))) names.push_back(feature_name(k));
    }
    for (const std::string &n : s.list("features", names)) {
        const FeatureKind k = feature_from_name(n);
        if (k == FeatureKind::Image) continue;
        if (!cache.dims.count(n)) throw ConfigError("feature '" + n + "' is not in the feature cache");
        if (std::find(spec.features.begin(), spec.features.end(), k) == spec.features.end()) spec.features.push_back(k);
    }
    std::sort(spec.features.begin(), spec.features.end());
    spec.precat = s.count("precat", 0);
    spec.postcat = s.count("postcat", 0);
    spec.replicas = s.count("replicas", 0);
    spec.dropout = s.real("dropout", 0.5);
    return spec;
}

NetworkConfig network_for(const FeatureCache &cache, const ModelSpec &spec) {
    NetworkConfig c;
    c.classes = cache.classes;
    c.postcat = spec.postcat;
    c.dropout = spec.dropout;
    for (FeatureKind k : spec.features) {
        const std::string n = feature_name(k);
        if (!cache.dims.count(n)) throw ConfigError("feature '" + n + "' is not in the feature cache");
        BranchSpec b;
        b.kind = k;
        b.precat = spec.precat;
        if (spec.replicas && is_context_feature(k)) {
            b.replicas = spec.replicas;
            b.radii = cache.radii;
            b.input_dim = 2 * cache.key_counts.at(n) * cache.radii.size();
        } else {
            b.input_dim = cache.dims.at(n);
        }
        c.branches.push_back(std::move(b));
    }
    if (spec.replicas && std::none_of(spec.features.begin(), spec.features.end(), is_context_feature)) {
        throw ConfigError("radius learning needs a context feature (hashtag or visual)");
    }
    c.validate();
    return c;
}

TrainConfig train_config_from(const Settings &s) {
    TrainConfig t;
    t.lr = s.real("lr", t.lr);
    t.momentum = s.real("momentum", t.momentum);
    t.weight_decay = s.real("weight_decay", t.weight_decay);
    t.epochs = static_cast<int>(s.integer("epochs", t.epochs));
    t.lr_step_epochs = static_cast<int>(s.integer("lr_step", t.lr_step_epochs));
    t.lr_decay = s.real("lr_decay", t.lr_decay);
    t.batch_size = s.count("batch", t.batch_size);
    t.radius_lr_mult = s.real("radius_lr_mult", t.radius_lr_mult);
    t.seed = s.seed();
    t.validate();
    return t;
}

namespace {

Sample sample_of(const CachedRecord &r, const NetworkConfig &config) {
    Sample s;
    s.label = r.label.value_or(-1);
    for (const BranchSpec &b : config.branches) {
        if (b.replicas) {
            const HistFnBank *bank = r.bank(b.kind);
            if (!bank) throw ShapeError("record " + r.id + " lacks the " + feature_name(b.kind) + " bank");
            s.inputs.push_back(bank->all_values());
        } else {
            const NamedFeature *f = r.bundle.find(b.kind);
            if (!f) throw ShapeError("record " + r.id + " lacks the " + feature_name(b.kind) + " feature");
            s.inputs.emplace_back(f->values);
        }
    }
    return s;
}

}  // namespace

std::vector<Sample> make_samples(const FeatureCache &cache, const NetworkConfig &config, const std::string &split,
                                 std::vector<std::size_t> *record_index) {
    std::vector<Sample> out;
    for (std::size_t i = 0; i < cache.records.size(); ++i) {
        const CachedRecord &r = cache.records[i];
        if (!split.empty() && r.split != split) continue;
        if (!r.label) continue;
        out.push_back(sample_of(r, config));
        if (record_index) record_index->push_back(i);
    }
    return out;
}

PredictionSet predict_set(const Network &net, const std::vector<Sample> &samples) {
    PredictionSet preds;
    preds.reserve(samples.size());
    for (const Sample &s : samples) preds.push_back({net.predict(s), s.label});
    return preds;
}

std::string metrics_csv(const MetricsSummary &m) {
    std::string out = "class,ap,acc1,acc5,n_test\n";
    for (const ClassMetrics &c : m.per_class) {
        out += std::to_string(c.cls) + "," + (c.ap ? fmt(*c.ap) : std::string()) + "," + fmt(c.acc1) + "," +
               fmt(c.acc5) + "," + std::to_string(c.n_test) + "\n";
    }
    out += "mean," + fmt(m.mean_ap) + "," + fmt(m.acc1) + "," + fmt(m.acc5) + "," + std::to_string(m.n_test) + "\n";
    return out;
}

std::string loss_csv(const std::vector<EpochStat> &curve) {
    std::string out = "epoch,loss,lr\n";
    for (const EpochStat &e : curve) out += std::to_string(e.epoch) + "," + fmt(e.loss, "%.10g") + "," + fmt(e.lr, "%.10g") + "\n";
    return out;
}

std::string radius_report(const Network &net, const FeatureCache &cache) {
    std::string out = "feature,key,block,mean_m,min_m,max_m,radii_m\n";
    const auto &branches = net.config().branches;
    for (std::size_t b = 0; b < branches.size(); ++b) {
        if (!branches[b].replicas) continue;
        const RadiusLayer &layer = net.radius_layers()[b];
        const std::string name = feature_name(branches[b].kind);
        const std::size_t keys = cache.key_counts.count(name) ? cache.key_counts.at(name) : layer.fn_count() / 2;
        for (std::size_t h = 0; h < layer.fn_count(); ++h) {
            const auto first = layer.rho.begin() + static_cast<std::ptrdiff_t>(h * layer.replicas());
            const std::vector<double> rho(first, first + static_cast<std::ptrdiff_t>(layer.replicas()));
            double mean = 0.0;
            for (double r : rho) mean += r;
            mean /= static_cast<double>(rho.size());
            std::string list;
            for (double r : rho) list += (list.empty() ? "" : " ") + fmt(r, "%.1f");
            out += name + "," + std::to_string(h % keys) + "," + (h < keys ? "across" : "within") + "," +
                   fmt(mean, "%.1f") + "," + fmt(*std::min_element(rho.begin(), rho.end()), "%.1f") + "," +
                   fmt(*std::max_element(rho.begin(), rho.end()), "%.1f") + "," + list + "\n";
        }
    }
    return out;
}

std::vector<RasterMap> load_map_dir(const std::string &dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("map directory '" + dir + "' does not exist");
    std::vector<std::string> paths;
    for (const auto &entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".georaster") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<RasterMap> maps;
    for (const auto &p : paths) maps.push_back(load_raster(p));
    return maps;
}

// ---------------------------------------------------------------------------

json cmd_synth(const Settings &s, std::ostream &log) {
    SynthSpec spec;
    spec.seed = s.seed();
    spec.classes = s.count("synth.classes", spec.classes);
    spec.sensitive = s.count("synth.sensitive", std::min(spec.sensitive, spec.classes));
    spec.train = s.count("synth.train", spec.train);
    spec.test = s.count("synth.test", spec.test);
    spec.bbox = s.bbox("synth.bbox", spec.bbox);
    spec.embedding_dim = s.count("synth.embedding_dim", spec.embedding_dim);
    spec.snr = s.real("synth.snr", spec.snr);
    spec.location_purity = s.real("synth.location_purity", spec.location_purity);
    spec.cities = s.count("synth.cities", spec.cities);
    spec.max_hotspots = s.count("synth.max_hotspots", spec.max_hotspots);
    spec.hotspot_sigma_min_km = s.real("synth.hotspot_sigma_min_km", spec.hotspot_sigma_min_km);
    spec.hotspot_sigma_max_km = s.real("synth.hotspot_sigma_max_km", spec.hotspot_sigma_max_km);
    spec.tags_per_class = s.count("synth.tags_per_class", spec.tags_per_class);
    spec.tag_purity = s.real("synth.tag_purity", spec.tag_purity);
    spec.concept_count = s.count("synth.concept_count", spec.concept_count);
    spec.concept_images = s.count("synth.concept_images", spec.concept_images);
    spec.map_rows = s.count("synth.map_rows", spec.map_rows);
    spec.map_cols = s.count("synth.map_cols", spec.map_cols);
    spec.zips = s.count("synth.zips", spec.zips);
    spec.acs_dim = s.count("synth.acs_dim", spec.acs_dim);

    const std::string out = s.required("out");
    const SynthData data = generate_synthetic(spec);
    write_synthetic(data, spec, out);
    json m = make_manifest("synth", s, {"records.jsonl", "corpus.jsonl", "concepts.jsonl", "zips.csv", "maps/", "synth.json"});
    m["synth"] = spec.to_json();
    write_manifest(join_path(out, "manifest.json"), m);
    log << "synth: " << data.records.size() << " records, " << data.hashtags.size() << " hashtag events, "
        << data.concepts.size() << " concept images -> " << out << "\n";
    return m;
}

json cmd_extract(const Settings &s, std::ostream &log) {
    const std::vector<GeoRecord> records = read_records(s.required("records"));
    const std::string out = s.required("out");

    FeatureConfig config;
    for (const std::string &n : s.list("features", {})) {
        switch (feature_from_name(n)) {
            case FeatureKind::Image: break;
            case FeatureKind::Gps: config.gps = true; break;
            case FeatureKind::Map: config.map = true; break;
            case FeatureKind::Acs: config.acs = true; break;
            case FeatureKind::Hashtag: config.hashtag = true; break;
            case FeatureKind::Visual: config.visual = true; break;
        }
    }
    config.gps_grid = s.grid("gps", GridSpec(100, 200));
    config.radii = s.radii("radii");
    config.embedding_dim = records.empty() ? 0 : records.front().embedding.size();
    const GridSpec pool_grid = s.grid("grid", GridSpec(25000, 50000));

    FeatureResources res;
    if (config.map) res.maps = load_map_dir(s.required("maps"));
    if (config.acs) res.zips = load_zip_table(s.required("zips"));
    SpatialIndex hashtag_index, concept_index;
    if (config.hashtag) {
        const auto events = read_corpus(s.required("corpus"));
        res.hashtag_count = s.count("hashtags", max_key_plus_one(events));
        hashtag_index = build_index(events, pool_grid, res.hashtag_count);
        res.hashtag_index = &hashtag_index;
    }
    if (config.visual) {
        const ConceptCorpus cc = read_concepts(s.required("concepts"));
        res.concept_count = cc.concept_count;
        concept_index = build_index(cc.events, pool_grid, cc.concept_count);
        res.concept_index = &concept_index;
    }

    std::size_t classes = 0;
    for (const GeoRecord &r : records) {
        if (r.label) classes = std::max<std::size_t>(classes, static_cast<std::size_t>(std::max(0, *r.label)) + 1);
    }
    classes = s.count("classes", classes);

    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    FeatureCache cache = extract_features(records, config, res, classes, s.count("threads", hw));
    cache.config = s.to_json();
    ensure_parent(out);
    save_feature_cache(out, cache);
    json m = make_manifest("extract", s, {out});
    m["cache"] = cache.manifest();
    write_manifest(out + ".manifest.json", m);
    log << "extract: " << cache.records.size() << " records, dims";
    for (const auto &[k, v] : cache.dims) log << " " << k << "=" << v;
    log << " -> " << out << "\n";
    return m;
}

namespace {

struct TrainedModel {
    ModelSpec spec;
    TrainResult result;
};

TrainedModel train_model(const FeatureCache &cache, const ModelSpec &spec, const TrainConfig &tc) {
    const NetworkConfig nc = network_for(cache, spec);
    const std::vector<Sample> train_set = make_samples(cache, nc, "train");
    return {spec, train(train_set, nc, tc)};
}

MetricsSummary evaluate_model(const Network &net, const FeatureCache &cache, const std::string &split) {
    const std::vector<Sample> samples = make_samples(cache, net.config(), split);
    if (samples.empty()) throw ConfigError("no labelled records in split '" + split + "'");
    return evaluate(predict_set(net, samples), cache.classes);
}

}  // namespace

json cmd_train(const Settings &s, std::ostream &log) {
    const TrainConfig tc = train_config_from(s);
    const FeatureCache cache = load_feature_cache(s.required("cache"));
    const ModelSpec spec = model_spec_from(s, cache);
    const std::string out = s.required("out");
    ensure_dir(out);

    const TrainedModel tm = train_model(cache, spec, tc);
    const Network &net = tm.result.model;
    std::vector<std::string> outputs{"model.ckpt", "loss.csv"};
    save_checkpoint(net, join_path(out, "model.ckpt"));
    write_text_file(join_path(out, "loss.csv"), loss_csv(tm.result.curve));
    if (spec.replicas) {
        write_text_file(join_path(out, "radii.csv"), radius_report(net, cache));
        outputs.push_back("radii.csv");
    }
    json m = make_manifest("train", s, outputs);
    m["model"] = spec.name();
    m["seed"] = tc.seed;
    json layers = json::array();
    for (const LayerSpec &l : net.config().layers()) layers.push_back(describe(l));
    m["layers"] = layers;
    m["final_loss"] = tm.result.curve.back().loss;
    write_manifest(join_path(out, "manifest.json"), m);
    log << "train: " << spec.name() << ", final loss " << fmt(tm.result.curve.back().loss, "%.4f") << " -> " << out
        << "\n";
    return m;
}

json cmd_eval(const Settings &s, std::ostream &log) {
    const FeatureCache cache = load_feature_cache(s.required("cache"));
    const Network net = load_checkpoint(s.required("model"));
    const std::string out = s.required("out");
    const MetricsSummary m = evaluate_model(net, cache, s.str("split", "test"));
    ensure_parent(out);
    write_text_file(out, metrics_csv(m));
    json manifest = make_manifest("eval", s, {out});
    manifest["mean_ap"] = m.mean_ap;
    manifest["acc1"] = m.acc1;
    manifest["acc5"] = m.acc5;
    write_manifest(out + ".manifest.json", manifest);
    log << "eval: mAP " << fmt(m.mean_ap, "%.4f") << "  acc@1 " << fmt(m.acc1, "%.4f") << "  acc@5 "
        << fmt(m.acc5, "%.4f") << "  (" << m.n_test << " records)\n";
    return manifest;
}

json cmd_predict(const Settings &s, std::ostream &log) {
    const FeatureCache cache = load_feature_cache(s.required("cache"));
    const Network net = load_checkpoint(s.required("model"));
    const std::string out = s.required("out");
    const std::string split = s.str("split", "test");
    std::string csv = "id,label,top1";
    for (std::size_t c = 0; c < cache.classes; ++c) csv += ",p" + std::to_string(c);
    csv += "\n";
    std::size_t n = 0;
    for (const CachedRecord &r : cache.records) {
        if (!split.empty() && r.split != split) continue;
        const Sample sample = sample_of(r, net.config());
        const std::vector<double> probs = net.predict(sample);
        csv += r.id + "," + (r.label ? std::to_string(*r.label) : std::string()) + "," +
               std::to_string(top_k(probs, 1).front());
        for (double p : probs) csv += "," + fmt(p, "%.6g");
        csv += "\n";
        ++n;
    }
    ensure_parent(out);
    write_text_file(out, csv);
    json m = make_manifest("predict", s, {out});
    write_manifest(out + ".manifest.json", m);
    log << "predict: " << n << " records -> " << out << "\n";
    return m;
}

json cmd_baseline(const Settings &s, std::ostream &log) {
    const FeatureCache cache = load_feature_cache(s.required("cache"));
    const std::string out = s.required("out");
    ensure_dir(out);
    const std::size_t classes = cache.classes;

    Network image_net;
    if (s.has("model")) {
        image_net = load_checkpoint(s.required("model"));
    } else {
        Settings image_only = s;
        image_only.set("features", "image");
        image_only.set("replicas", "0");
        const ModelSpec spec = model_spec_from(image_only, cache);
        image_net = train_model(cache, spec, train_config_from(s)).result.model;
    }
    if (image_net.config().branches.size() != 1 || image_net.config().branches[0].kind != FeatureKind::Image) {
        throw ConfigError("baseline needs an image-only model");
    }

    std::vector<std::size_t> test_index;
    const std::vector<Sample> test = make_samples(cache, image_net.config(), "test", &test_index);
    if (test.empty()) throw ConfigError("no labelled test records");
    const PredictionSet image_preds = predict_set(image_net, test);

    const std::string prior = s.str("prior", "all");
    if (prior != "all" && prior != "knn" && prior != "radius" && prior != "uniform") {
        throw ConfigError("prior must be one of knn, radius, uniform, all");
    }
    const double eps = s.real("epsilon", kDefaultPriorEpsilon);
    const ClassDistribution p_class = ClassDistribution::uniform(classes);

    struct Row {
        std::string method;
        MetricsSummary m;
    };
    std::vector<Row> rows{{"image", evaluate(image_preds, classes)}};
    std::vector<std::string> outputs;

    const auto combine = [&](const std::string &method, const auto &prior_of) {
        PredictionSet preds = image_preds;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const ClassDistribution p = prior_of(cache.records[test_index[i]].point);
            preds[i].scores = bayes_combine({image_preds[i].scores}, p, p_class);
        }
        rows.push_back({method, evaluate(preds, classes)});
    };

    if (prior == "uniform") {
        combine("uniform", [&](const GeoPoint &) { return ClassDistribution::uniform(classes); });
    }
    if (prior == "all" || prior == "knn") {
        std::vector<LabeledPoint> train_pts;
        for (const CachedRecord &r : cache.records) {
            if (r.split == "train" && r.label) train_pts.push_back({r.point, *r.label});
        }
        const std::size_t k = s.count("k", 10);
        combine("knn", [&](const GeoPoint &p) { return knn_prior(train_pts, p, k, eps, classes); });
    }
    if (prior == "all" || prior == "radius") {
        std::vector<KeyedPoint> events;
        std::size_t dropped = 0;
        for (const KeyedPoint &e : read_corpus(s.required("corpus"))) {
            if (e.key < classes) {
                events.push_back(e);
            } else {
                ++dropped;
            }
        }
        if (dropped) warn(std::to_string(dropped) + " corpus events have keys that are not classes; ignored");
        const SpatialIndex index = build_index(events, s.grid("grid", GridSpec(25000, 50000)), classes);
        const double r = s.real("radius_m", 10000.0);
        combine("radius", [&](const GeoPoint &p) { return radius_prior(p, index, r, eps); });
    }

    std::string summary = "method,mean_ap,acc1,acc5,n_test\n";
    for (const Row &row : rows) {
        const std::string file = "metrics_" + row.method + ".csv";
        write_text_file(join_path(out, file), metrics_csv(row.m));
        outputs.push_back(file);
        summary += row.method + "," + fmt(row.m.mean_ap) + "," + fmt(row.m.acc1) + "," + fmt(row.m.acc5) + "," +
                   std::to_string(row.m.n_test) + "\n";
        log << "baseline " << row.method << ": mAP " << fmt(row.m.mean_ap, "%.4f") << "  acc@1 "
            << fmt(row.m.acc1, "%.4f") << "  acc@5 " << fmt(row.m.acc5, "%.4f") << "\n";
    }
    write_text_file(join_path(out, "summary.csv"), summary);
    outputs.push_back("summary.csv");
    json m = make_manifest("baseline", s, outputs);
    write_manifest(join_path(out, "manifest.json"), m);
    return m;
}

json cmd_select(const Settings &s, std::ostream &log) {
    const std::vector<KeyedPoint> events = read_corpus(s.required("corpus"));
    const std::string out = s.required("out");
    const GridSpec grid = s.grid("select", GridSpec(100, 200));
    const double alpha = s.real("alpha", 0.01);
    const double alpha_p = s.real("alpha_p", 0.0);

    std::vector<GeoPoint> all;
    std::map<int, std::vector<GeoPoint>> by_class;
    for (const KeyedPoint &e : events) {
        all.push_back(e.point);
        by_class[static_cast<int>(e.key)].push_back(e.point);
    }
    const GeoDistribution p = estimate_distribution(all, grid, alpha_p);
    std::map<int, GeoDistribution> q;
    for (const auto &[c, pts] : by_class) q.emplace(c, estimate_distribution(pts, grid, alpha));

    std::optional<double> threshold;
    if (s.has("threshold")) threshold = s.real("threshold", 0.0);
    const auto ranked = select_classes(p, q, s.count("top_n", 100), threshold);
    std::string csv = "class,kl_nats,rank\n";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        csv += std::to_string(ranked[i].cls) + "," + fmt(ranked[i].kl, "%.6f") + "," + std::to_string(i + 1) + "\n";
    }
    ensure_parent(out);
    write_text_file(out, csv);
    json m = make_manifest("select", s, {out});
    write_manifest(out + ".manifest.json", m);
    log << "select: " << ranked.size() << " of " << q.size() << " classes -> " << out << "\n";
    return m;
}

json cmd_ablate(const Settings &s, std::ostream &log) {
    const FeatureCache cache = load_feature_cache(s.required("cache"));
    const TrainConfig tc = train_config_from(s);
    const std::string out = s.required("out");
    ensure_dir(out);

    // Feature sets are written like "image+gps"; "all" means every cached feature.
    std::vector<std::string> all_names;
    for (FeatureKind k : kAllFeatureKinds) {
        if (k != FeatureKind::Image && cache.dims.count(feature_name(k))) all_names.push_back(feature_name(k));
    }
    std::vector<std::string> sets{"image"};
    for (const auto &n : all_names) sets.push_back("image+" + n);
    if (all_names.size() > 1) sets.push_back("all");
    sets = s.list("ablate.features", sets);
    const std::vector<std::string> precats = s.list("ablate.precat", {"0"});
    const std::vector<std::string> replica_list = s.list("ablate.replicas", {"0", "5", "10"});

    std::string csv = "name,features,precat,postcat,replicas,mean_ap,acc1,acc5,status\n";
    json rows = json::array();
    for (const std::string &set : sets) {
        std::string names;
        if (set == "all") {
            for (const auto &n : all_names) names += (names.empty() ? "" : ",") + n;
        } else {
            std::string item;
            for (char ch : set + "+") {
                if (ch == '+') {
                    if (!item.empty()) names += (names.empty() ? "" : ",") + item;
                    item.clear();
                } else {
                    item += ch;
                }
            }
        }
        for (const std::string &pc : precats) {
            for (const std::string &rep : replica_list) {
                Settings cell = s;
                cell.set("features", names);
                cell.set("precat", pc);
                cell.set("replicas", rep);
                const ModelSpec spec = model_spec_from(cell, cache);
                const bool has_context = std::any_of(spec.features.begin(), spec.features.end(), is_context_feature);
                std::string line = "\"" + spec.name() + "\",\"" + set + "\"," + std::to_string(spec.precat) + "," +
                                   std::to_string(spec.postcat) + "," + std::to_string(spec.replicas) + ",";
                json row = {{"name", spec.name()}, {"features", set}, {"precat", spec.precat},
                            {"postcat", spec.postcat}, {"replicas", spec.replicas}};
                if (spec.replicas && !has_context) {
                    csv += line + ",,,no context feature\n";
                    row["status"] = "no context feature";
                    rows.push_back(row);
                    log << "ablate: " << spec.name() << " skipped (no context feature)" << std::endl;
                    continue;
                }
                const TrainedModel tm = train_model(cache, spec, tc);
                const MetricsSummary m = evaluate_model(tm.result.model, cache, "test");
                csv += line + fmt(m.mean_ap) + "," + fmt(m.acc1) + "," + fmt(m.acc5) + ",ok\n";
                row["mean_ap"] = m.mean_ap;
                row["acc1"] = m.acc1;
                row["acc5"] = m.acc5;
                row["status"] = "ok";
                rows.push_back(row);
                log << "ablate: " << spec.name() << "  mAP " << fmt(m.mean_ap, "%.4f") << "  acc@1 "
                    << fmt(m.acc1, "%.4f") << "  acc@5 " << fmt(m.acc5, "%.4f") << std::endl;
            }
        }
    }
    write_text_file(join_path(out, "ablation.csv"), csv);
    json m = make_manifest("ablate", s, {"ablation.csv"});
    m["rows"] = rows;
    write_manifest(join_path(out, "manifest.json"), m);
    return m;
}

json cmd_radii(const Settings &s, std::ostream &log) {
    const FeatureCache cache = load_feature_cache(s.required("cache"));
    const Network net = load_checkpoint(s.required("model"));
    const std::string out = s.required("out");
    bool any = false;
    for (const BranchSpec &b : net.config().branches) any = any || b.replicas > 0;
    if (!any) throw ConfigError("model has no radius learning layer");
    ensure_parent(out);
    write_text_file(out, radius_report(net, cache));
    json m = make_manifest("radii", s, {out});
    write_manifest(out + ".manifest.json", m);
    log << "radii: report -> " << out << "\n";
    return m;
}

}  // namespace geoctx
