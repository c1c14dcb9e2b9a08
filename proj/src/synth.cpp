#include "geoctx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "geoctx/error.hpp"
#include "geoctx/io.hpp"
#include "geoctx/random.hpp"

namespace geoctx {

namespace {

constexpr double kKmPerDegLat = kEarthRadiusM * std::numbers::pi / 180.0 / 1000.0;

struct Blob {
    GeoPoint center;
    double sigma_km;
    double weight;
};

GeoPoint uniform_point(Rng &rng, const BoundingBox &bb) {
    return {rng.uniform(bb.lon_min, bb.lon_max), rng.uniform(bb.lat_min, bb.lat_max)};
}

// Isotropic Gaussian in a local tangent plane, resampled until inside the box.
GeoPoint gaussian_near(Rng &rng, const GeoPoint &c, double sigma_km, const BoundingBox &bb) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double dy = rng.normal() * sigma_km;
        const double dx = rng.normal() * sigma_km;
        GeoPoint p{c.lon + dx / (kKmPerDegLat * std::cos(c.lat * std::numbers::pi / 180.0)),
                   c.lat + dy / kKmPerDegLat};
        if (bb.contains(p)) return p;
    }
    return c;
}

class PopulationModel {
public:
    PopulationModel(Rng &rng, const SynthSpec &spec) : bbox_(spec.bbox) {
        BoundingBox inner{bbox_.lon_min + 1.0, bbox_.lon_max - 1.0, bbox_.lat_min + 1.0, bbox_.lat_max - 1.0};
        for (std::size_t i = 0; i < spec.cities; ++i) {
            cities_.push_back({uniform_point(rng, inner), spec.city_sigma_km, rng.uniform(0.5, 2.0)});
            total_ += cities_.back().weight;
        }
    }

    const std::vector<Blob> &cities() const { return cities_; }

    GeoPoint sample(Rng &rng) const {
        if (cities_.empty() || rng.bernoulli(0.15)) return uniform_point(rng, bbox_);
        double u = rng.uniform() * total_;
        for (const Blob &c : cities_) {
            if (u < c.weight) return gaussian_near(rng, c.center, c.sigma_km, bbox_);
            u -= c.weight;
        }
        return gaussian_near(rng, cities_.back().center, cities_.back().sigma_km, bbox_);
    }

private:
    BoundingBox bbox_;
    std::vector<Blob> cities_;
    double total_ = 0.0;
};

GeoPoint sample_hotspot(Rng &rng, const std::vector<Blob> &spots, const BoundingBox &bb) {
    const Blob &b = spots[static_cast<std::size_t>(rng.below(spots.size()))];
    return gaussian_near(rng, b.center, b.sigma_km, bb);
}

// Smooth scalar field in [0, 1] built from a few random plane waves.
struct Field {
    struct Wave {
        double fx, fy, phase, amp;
    };
    std::vector<Wave> waves;

    static Field random(Rng &rng) {
        Field f;
        for (int i = 0; i < 4; ++i) {
            f.waves.push_back({rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0),
                               rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(0.3, 1.0)});
        }
        return f;
    }

    double at(double u, double v) const {
        double s = 0.0, norm = 0.0;
        for (const Wave &w : waves) {
            s += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * u + w.fy * v) + w.phase);
            norm += w.amp;
        }
        return 0.5 + 0.5 * s / norm;
    }
};

}  // namespace

void SynthSpec::validate() const {
    if (classes < 1) throw ConfigError("synth: need at least one class");
    if (sensitive > classes) throw ConfigError("synth: more sensitive classes than classes");
    if (train + test < 1) throw ConfigError("synth: need at least one record");
    if (embedding_dim < 1) throw ConfigError("synth: embedding dimension must be positive");
    if (!(snr >= 0.0)) throw ConfigError("synth: SNR must be non-negative");
    if (!(location_purity >= 0.0 && location_purity <= 1.0) || !(tag_purity >= 0.0 && tag_purity <= 1.0)) {
        throw ConfigError("synth: purities must lie in [0, 1]");
    }
    if (max_hotspots < 1) throw ConfigError("synth: need at least one hotspot per class");
    if (!(hotspot_sigma_min_km > 0.0 && hotspot_sigma_max_km >= hotspot_sigma_min_km)) {
        throw ConfigError("synth: invalid hotspot size range");
    }
    if (map_rows < 1 || map_cols < 1 || zips < 1) throw ConfigError("synth: maps and zip table must be nonempty");
}

nlohmann::json SynthSpec::to_json() const {
    return {{"classes", classes},
            {"sensitive", sensitive},
            {"train", train},
            {"test", test},
            {"bbox", {bbox.lon_min, bbox.lat_min, bbox.lon_max, bbox.lat_max}},
            {"embedding_dim", embedding_dim},
            {"snr", snr},
            {"location_purity", location_purity},
            {"cities", cities},
            {"city_sigma_km", city_sigma_km},
            {"max_hotspots", max_hotspots},
            {"hotspot_sigma_min_km", hotspot_sigma_min_km},
            {"hotspot_sigma_max_km", hotspot_sigma_max_km},
            {"tags_per_class", tags_per_class},
            {"tag_purity", tag_purity},
            {"concept_count", concept_count},
            {"concept_images", concept_images},
            {"map_rows", map_rows},
            {"map_cols", map_cols},
            {"zips", zips},
            {"acs_dim", acs_dim},
            {"seed", seed}};
}

SynthData generate_synthetic(const SynthSpec &spec) {
    spec.validate();
    Rng world = Rng::stream(spec.seed, "synth.world");
    Rng rec_rng = Rng::stream(spec.seed, "synth.records");
    Rng tag_rng = Rng::stream(spec.seed, "synth.tags");
    Rng concept_rng = Rng::stream(spec.seed, "synth.concepts");
    Rng map_rng = Rng::stream(spec.seed, "synth.maps");
    Rng zip_rng = Rng::stream(spec.seed, "synth.zips");

    const PopulationModel population(world, spec);
    SynthData data;
    data.sensitive.assign(spec.classes, false);

    // Sensitive classes are spread evenly over the class ids.
    for (std::size_t i = 0; i < spec.sensitive; ++i) data.sensitive[i * spec.classes / spec.sensitive] = true;

    std::vector<std::vector<Blob>> hotspots(spec.classes);
    const double log_lo = std::log(spec.hotspot_sigma_min_km);
    const double log_hi = std::log(spec.hotspot_sigma_max_km);
    for (std::size_t c = 0; c < spec.classes; ++c) {
        if (!data.sensitive[c]) continue;
        const std::size_t n = 1 + static_cast<std::size_t>(world.below(spec.max_hotspots));
        for (std::size_t h = 0; h < n; ++h) {
            const GeoPoint center = world.bernoulli(0.5) || population.cities().empty()
                                        ? uniform_point(world, spec.bbox)
                                        : gaussian_near(world, population.cities()[world.below(population.cities().size())].center,
                                                        2.0 * spec.city_sigma_km, spec.bbox);
            hotspots[c].push_back({center, std::exp(world.uniform(log_lo, log_hi)), 1.0});
        }
    }

    std::vector<std::vector<double>> prototypes(spec.classes, std::vector<double>(spec.embedding_dim));
    for (auto &p : prototypes) {
        for (double &v : p) v = world.normal();
    }

    const std::size_t total = spec.train + spec.test;
    for (std::size_t i = 0; i < total; ++i) {
        GeoRecord r;
        char id[32];
        std::snprintf(id, sizeof id, "r%06zu", i);
        r.id = id;
        const auto label = static_cast<int>(rec_rng.below(spec.classes));
        r.label = label;
        r.split = i < spec.train ? "train" : "test";
        const auto c = static_cast<std::size_t>(label);
        r.point = data.sensitive[c] && rec_rng.bernoulli(spec.location_purity)
                      ? sample_hotspot(rec_rng, hotspots[c], spec.bbox)
                      : population.sample(rec_rng);
        r.embedding.resize(spec.embedding_dim);
        for (std::size_t d = 0; d < spec.embedding_dim; ++d) {
            r.embedding[d] = spec.snr * prototypes[c][d] + rec_rng.normal();
        }
        if (rec_rng.bernoulli(0.5)) r.tags.push_back(static_cast<std::uint32_t>(label));
        data.records.push_back(std::move(r));
    }

    for (std::size_t c = 0; c < spec.classes; ++c) {
        for (std::size_t i = 0; i < spec.tags_per_class; ++i) {
            const GeoPoint p = data.sensitive[c] && tag_rng.bernoulli(spec.tag_purity)
                                   ? sample_hotspot(tag_rng, hotspots[c], spec.bbox)
                                   : population.sample(tag_rng);
            data.hashtags.push_back({p, static_cast<std::uint32_t>(c), 1.0});
        }
    }

    std::vector<std::size_t> sensitive_ids;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        if (data.sensitive[c]) sensitive_ids.push_back(c);
    }
    for (std::size_t i = 0; i < spec.concept_images && spec.concept_count > 0; ++i) {
        std::vector<double> probs(spec.concept_count);
        for (double &p : probs) p = concept_rng.uniform(0.0, 0.05);
        GeoPoint p;
        if (!sensitive_ids.empty() && concept_rng.bernoulli(0.3)) {
            const std::size_t c = sensitive_ids[concept_rng.below(sensitive_ids.size())];
            p = sample_hotspot(concept_rng, hotspots[c], spec.bbox);
            probs[c % spec.concept_count] = concept_rng.uniform(0.6, 0.95);
        } else {
            p = population.sample(concept_rng);
        }
        data.concepts.emplace_back(p, std::move(probs));
    }

    const BoundingBox &bb = spec.bbox;
    for (std::size_t m = 0; m < kMapCount; ++m) {
        Field fr = Field::random(map_rng), fg = Field::random(map_rng), fb = Field::random(map_rng);
        std::vector<std::uint8_t> px(spec.map_rows * spec.map_cols * 3);
        for (std::size_t r = 0; r < spec.map_rows; ++r) {
            const double v = (static_cast<double>(r) + 0.5) / static_cast<double>(spec.map_rows);
            for (std::size_t c = 0; c < spec.map_cols; ++c) {
                const double u = (static_cast<double>(c) + 0.5) / static_cast<double>(spec.map_cols);
                std::uint8_t *p = px.data() + (r * spec.map_cols + c) * 3;
                p[0] = static_cast<std::uint8_t>(std::lround(255.0 * fr.at(u, v)));
                p[1] = static_cast<std::uint8_t>(std::lround(255.0 * fg.at(u, v)));
                p[2] = static_cast<std::uint8_t>(std::lround(255.0 * fb.at(u, v)));
            }
        }
        char name[32];
        std::snprintf(name, sizeof name, "map_%02zu", m);
        data.maps.emplace_back(name, spec.map_rows, spec.map_cols, bb, std::move(px));
    }

    std::vector<Field> stat_fields;
    for (std::size_t d = 0; d < spec.acs_dim; ++d) stat_fields.push_back(Field::random(zip_rng));
    std::vector<ZipEntry> zips;
    for (std::size_t z = 0; z < spec.zips; ++z) {
        ZipEntry e;
        char code[16];
        std::snprintf(code, sizeof code, "%05zu", 10000 + z * 7);
        e.zip = code;
        e.centroid = population.sample(zip_rng);
        const double u = (e.centroid.lon - bb.lon_min) / bb.lon_span();
        const double v = (bb.lat_max - e.centroid.lat) / bb.lat_span();
        for (const Field &f : stat_fields) e.stats.push_back(f.at(u, v) + 0.05 * zip_rng.normal());
        zips.push_back(std::move(e));
    }
    data.zips = ZipTable(std::move(zips));
    return data;
}

void write_synthetic(const SynthData &data, const SynthSpec &spec, const std::string &dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "maps", ec);
    if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
    write_records((fs::path(dir) / "records.jsonl").string(), data.records);
    write_corpus((fs::path(dir) / "corpus.jsonl").string(), data.hashtags);
    write_concepts((fs::path(dir) / "concepts.jsonl").string(), data.concepts);
    save_zip_table((fs::path(dir) / "zips.csv").string(), data.zips);
    for (const RasterMap &m : data.maps) save_raster((fs::path(dir) / "maps" / (m.name + ".georaster")).string(), m);
    nlohmann::json meta = spec.to_json();
    std::vector<int> sens;
    for (std::size_t c = 0; c < data.sensitive.size(); ++c) {
        if (data.sensitive[c]) sens.push_back(static_cast<int>(c));
    }
    meta["sensitive_classes"] = sens;
    write_text_file((fs::path(dir) / "synth.json").string(), meta.dump(2) + "\n");
}

}  // namespace geoctx
