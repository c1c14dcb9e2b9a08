#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoctx/eval.hpp"
#include "geoctx/features.hpp"
#include "geoctx/io.hpp"
#include "geoctx/net.hpp"
#include "geoctx/settings.hpp"

namespace geoctx {

// Building blocks shared by the subcommands, the ablation runner and tests.

/// Extracts every record in order; `threads` > 1 splits records into
/// contiguous chunks. Errors are rethrown prefixed with the record id.
FeatureCache extract_features(const std::vector<GeoRecord> &records, const FeatureConfig &config,
                              const FeatureResources &resources, std::size_t classes,
                              std::size_t threads = 1);

struct ModelSpec {
    std::vector<FeatureKind> features;  // always starts with Image
    std::size_t precat = 0;
    std::size_t postcat = 0;
    std::size_t replicas = 0;  // radius learning on context features when > 0
    double dropout = 0.5;

    /// "Image + Hashtag 256/- RL10"
    std::string name() const;
};

ModelSpec model_spec_from(const Settings &s, const FeatureCache &cache);
NetworkConfig network_for(const FeatureCache &cache, const ModelSpec &spec);
TrainConfig train_config_from(const Settings &s);

/// Samples for records of one split (empty split = all records). Records
/// without a label are skipped.
std::vector<Sample> make_samples(const FeatureCache &cache, const NetworkConfig &config,
                                 const std::string &split, std::vector<std::size_t> *record_index = nullptr);

PredictionSet predict_set(const Network &net, const std::vector<Sample> &samples);

std::string metrics_csv(const MetricsSummary &m);
std::string loss_csv(const std::vector<EpochStat> &curve);
/// One row per learned histogram function: the key it pools, the
/// normalization block and the learned radii of every replica.
std::string radius_report(const Network &net, const FeatureCache &cache);

/// Directory listing of *.georaster files, sorted by name.
std::vector<RasterMap> load_map_dir(const std::string &dir);

// Subcommands. Each reads its resolved settings, writes its outputs plus a
// manifest echoing the settings, and returns that manifest.
nlohmann::json cmd_synth(const Settings &s, std::ostream &log);
nlohmann::json cmd_extract(const Settings &s, std::ostream &log);
nlohmann::json cmd_train(const Settings &s, std::ostream &log);
nlohmann::json cmd_eval(const Settings &s, std::ostream &log);
nlohmann::json cmd_predict(const Settings &s, std::ostream &log);
nlohmann::json cmd_baseline(const Settings &s, std::ostream &log);
nlohmann::json cmd_select(const Settings &s, std::ostream &log);
nlohmann::json cmd_ablate(const Settings &s, std::ostream &log);
nlohmann::json cmd_radii(const Settings &s, std::ostream &log);

}  // namespace geoctx
