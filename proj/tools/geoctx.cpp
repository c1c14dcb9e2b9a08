// Command-line front end. Every subcommand resolves its settings in three
// layers -- config file, --set assignments, explicit flags -- and hands them
// to the matching cmd_* function.
#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "geoctx/commands.hpp"
#include "geoctx/error.hpp"

namespace {

struct Flag {
    const char *name;
    const char *key;
    const char *help;
};

using Command = nlohmann::json (*)(const geoctx::Settings &, std::ostream &);

struct Subcommand {
    const char *name;
    const char *help;
    Command run;
    std::vector<Flag> flags;
};

const std::vector<Flag> kTrainFlags = {
    {"--cache", "cache", "feature cache file"},
    {"--out", "out", "output directory"},
    {"--seed", "seed", "random seed (required)"},
    {"--features", "features", "comma-separated features besides the image embedding"},
    {"--precat", "precat", "pre-cat layer width (0 = none)"},
    {"--postcat", "postcat", "post-cat layer width (0 = none)"},
    {"--replicas", "replicas", "radius learning replicas (0 = fixed histograms)"},
    {"--dropout", "dropout", "dropout ratio"},
    {"--lr", "lr", "learning rate"},
    {"--momentum", "momentum", "SGD momentum"},
    {"--weight-decay", "weight_decay", "weight decay"},
    {"--epochs", "epochs", "training epochs"},
    {"--lr-step", "lr_step", "epochs between learning rate decays"},
    {"--lr-decay", "lr_decay", "learning rate decay factor"},
    {"--batch", "batch", "minibatch size"},
    {"--radius-lr-mult", "radius_lr_mult", "learning rate multiplier for radii"},
};

std::vector<Flag> with(std::vector<Flag> base, const std::vector<Flag> &extra) {
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
}

std::vector<Subcommand> subcommands() {
    return {
        {"synth", "generate a synthetic benchmark", geoctx::cmd_synth,
         {{"--out", "out", "output directory"},
          {"--seed", "seed", "random seed (required)"},
          {"--classes", "synth.classes", "number of classes"},
          {"--sensitive", "synth.sensitive", "number of location-sensitive classes"},
          {"--train", "synth.train", "training records"},
          {"--test", "synth.test", "test records"},
          {"--embedding-dim", "synth.embedding_dim", "image embedding dimension"},
          {"--snr", "synth.snr", "class signal-to-noise ratio of the embeddings"}}},
        {"extract", "extract location features into a cache", geoctx::cmd_extract,
         {{"--records", "records", "records.jsonl"},
          {"--out", "out", "feature cache file"},
          {"--features", "features", "comma-separated: gps,map,acs,hashtag,visual"},
          {"--corpus", "corpus", "hashtag corpus.jsonl"},
          {"--concepts", "concepts", "concepts.jsonl"},
          {"--maps", "maps", "directory of .georaster maps"},
          {"--zips", "zips", "zip statistics CSV"},
          {"--hashtags", "hashtags", "hashtag vocabulary size"},
          {"--classes", "classes", "number of classes"},
          {"--radii", "radii", "comma-separated pooling radii in meters"},
          {"--threads", "threads", "worker threads"}}},
        {"train", "train a model on a feature cache", geoctx::cmd_train, kTrainFlags},
        {"eval", "evaluate a checkpoint", geoctx::cmd_eval,
         {{"--cache", "cache", "feature cache file"},
          {"--model", "model", "checkpoint"},
          {"--out", "out", "metrics CSV"},
          {"--split", "split", "split to evaluate"}}},
        {"predict", "write class probabilities", geoctx::cmd_predict,
         {{"--cache", "cache", "feature cache file"},
          {"--model", "model", "checkpoint"},
          {"--out", "out", "predictions CSV"},
          {"--split", "split", "split to predict (empty = all)"}}},
        {"baseline", "image-only classifier combined with location priors", geoctx::cmd_baseline,
         with(kTrainFlags, {{"--model", "model", "image-only checkpoint (trained when absent)"},
                            {"--corpus", "corpus", "hashtag corpus for the radius prior"},
                            {"--prior", "prior", "knn, radius, uniform or all"},
                            {"--k", "k", "neighbors for the kNN prior"},
                            {"--radius-m", "radius_m", "radius of the histogram prior"},
                            {"--epsilon", "epsilon", "prior smoothing"}})},
        {"select", "rank classes by geospatial KL divergence", geoctx::cmd_select,
         {{"--corpus", "corpus", "per-class corpus.jsonl (key = class)"},
          {"--out", "out", "ranking CSV"},
          {"--top-n", "top_n", "classes to keep"},
          {"--threshold", "threshold", "minimum divergence in nats"},
          {"--alpha", "alpha", "additive smoothing of per-class distributions"}}},
        {"ablate", "run the feature x width x replica grid", geoctx::cmd_ablate,
         with(kTrainFlags, {{"--sets", "ablate.features", "feature sets, e.g. image,image+gps,all"},
                            {"--precats", "ablate.precat", "pre-cat widths, e.g. 0,256"},
                            {"--replica-grid", "ablate.replicas", "replica counts, e.g. 0,5,10"}})},
        {"radii", "report learned pooling radii", geoctx::cmd_radii,
         {{"--cache", "cache", "feature cache file"},
          {"--model", "model", "checkpoint"},
          {"--out", "out", "report CSV"}}},
    };
}

// Error lines are tab-separated and must stay on one line.
std::string one_line(std::string s) {
    for (char &c : s) {
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    }
    return s;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"geoctx: location context image classification"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    const std::vector<Subcommand> subs = subcommands();
    std::string config_file;
    std::vector<std::string> assignments;
    std::map<std::string, std::string> flag_values;
    const Subcommand *chosen = nullptr;

    for (const Subcommand &sub : subs) {
        CLI::App *cmd = app.add_subcommand(sub.name, sub.help);
        cmd->add_option("--config", config_file, "key=value configuration file");
        cmd->add_option("--set", assignments, "override a setting (key=value)");
        for (const Flag &f : sub.flags) {
            cmd->add_option_function<std::string>(
                f.name, [&flag_values, key = std::string(f.key)](const std::string &v) { flag_values[key] = v; },
                f.help);
        }
        cmd->callback([&chosen, &sub] { chosen = &sub; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error\tusage\t" << one_line(e.what()) << "\n";
        return 2;
    }

    try {
        geoctx::Settings settings;
        if (!config_file.empty()) settings = geoctx::Settings::from_file(config_file);
        for (const std::string &a : assignments) settings.assign(a);
        for (const auto &[k, v] : flag_values) settings.set(k, v);
        chosen->run(settings, std::cout);
    } catch (const geoctx::Error &e) {
        std::cerr << "error\t" << e.code() << "\t" << one_line(e.what()) << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error\tinternal\t" << one_line(e.what()) << "\n";
        return 1;
    }
    return 0;
}
