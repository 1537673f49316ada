// Command-line front-end: dataset generation, training, evaluation,
// parameter accounting, and report rendering. Exit codes: 0 success,
// 2 configuration/usage error, 1 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "modrec/checkpoint.hpp"
#include "modrec/dataset.hpp"
#include "modrec/errors.hpp"
#include "modrec/framegen.hpp"
#include "modrec/metrics.hpp"
#include "modrec/model.hpp"
#include "modrec/presets.hpp"
#include "modrec/svg.hpp"
#include "modrec/threading.hpp"
#include "modrec/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace modrec;

namespace {

constexpr const char* kToolVersion = "1.0.0";

ordered_json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return ordered_json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw DataError("write failed for '" + path + "'");
}

std::string fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for hashing");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory '" + dir + "': " + ec.message());
}

std::vector<double> parse_edges(const std::string& csv) {
    std::vector<double> edges;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) edges.push_back(std::stod(item));
    return edges;
}

// Bin edges centered on the dataset's own SNR plan: grid values get
// step-wide bins, a clamped-normal plan gets 2 dB bins across its range.
std::vector<double> auto_edges(const ordered_json& header) {
    std::vector<double> edges;
    if (!header.contains("snr")) return edges;
    const auto& snr = header.at("snr");
    const std::string mode = snr.value("mode", "grid");
    if (mode == "grid") {
        const SnrSpec spec = SnrSpec::from_json(snr);
        for (const double v : spec.grid_values()) edges.push_back(v - spec.step / 2.0);
        edges.push_back(spec.stop + spec.step / 2.0);
    } else {
        const double lo = snr.value("min", -20.0), hi = snr.value("max", 40.0);
        for (double v = lo; v < hi + 1e-9; v += 2.0) edges.push_back(v);
        if (edges.empty() || edges.back() < hi) edges.push_back(hi);
    }
    return edges;
}

ModelConfig resolve_model_config(const std::string& preset_name,
                                 const std::string& config_path, const Dataset* data) {
    if (preset_name.empty() == config_path.empty())
        throw ConfigError("specify exactly one of --preset or --config");
    ModelConfig cfg;
    if (!preset_name.empty()) {
        cfg = preset_or_throw(preset_name).config;
    } else {
        cfg = ModelConfig::from_json(read_json_file(config_path));
    }
    if (data != nullptr) {
        // The architecture comes from the preset/config; frame length and
        // class count always follow the dataset at hand.
        cfg.n = data->frame_len();
        cfg.num_classes = data->num_classes();
    }
    cfg.validate();
    return cfg;
}

DatasetView view_all(const Dataset& data) {
    DatasetView view;
    view.data = &data;
    view.indices.resize(static_cast<std::size_t>(data.size()));
    for (std::int64_t i = 0; i < data.size(); ++i)
        view.indices[static_cast<std::size_t>(i)] = i;
    return view;
}

DatasetView pick_split(Splits& splits, const std::string& name) {
    if (name == "train") return splits.train;
    if (name == "val") return splits.val;
    if (name == "test") return splits.test;
    throw ConfigError("unknown split '" + name + "' (train|val|test|all)");
}

// ---- gen -------------------------------------------------------------

struct GenArgs {
    std::string spec_path, out_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int run_gen(const GenArgs& args) {
    DatasetSpec spec = DatasetSpec::from_json(read_json_file(args.spec_path));
    if (args.seed_set) spec.seed = args.seed;
    generate_dataset(spec, args.out_path);
    std::cerr << "wrote " << spec.frames << " frames of n=" << spec.n << " to "
              << args.out_path << " (fnv1a " << fnv1a_file(args.out_path) << ")\n";
    return 0;
}

// ---- params ----------------------------------------------------------

struct ParamsArgs {
    std::string preset_name, config_path;
    std::int64_t n = 0;
    std::int64_t classes = 0;
    bool all = false;
};

void print_breakdown(std::ostream& out, const std::string& label, const ModelConfig& cfg,
                     double reference) {
    const ParamBreakdown bd = count_parameters(cfg);
    out << label << "\n";
    out << "  n=" << cfg.n << " classes=" << cfg.num_classes << " d=" << cfg.embed_dim()
        << " tokens=" << cfg.token_count() << " layers=" << cfg.num_layers
        << " heads=" << cfg.num_heads << "\n";
    for (const auto& [name, count] : bd.components)
        out << "  " << name << std::string(name.size() < 14 ? 14 - name.size() : 1, ' ')
            << count << "\n";
    out << "  total         " << bd.total << "\n";
    if (reference > 0.0) {
        const double delta = 100.0 * (static_cast<double>(bd.total) - reference) / reference;
        char line[96];
        std::snprintf(line, sizeof(line), "  reference     %.0f  (delta %+.1f%%)\n",
                      reference, delta);
        out << line;
    }
}

int run_params(const ParamsArgs& args) {
    if (args.all) {
        std::cout << "name,total,reference,delta_pct\n";
        for (const auto& p : presets()) {
            const auto total = count_parameters(p.config).total;
            char line[160];
            std::snprintf(line, sizeof(line), "%s,%lld,%.0f,%+.1f\n", p.name.c_str(),
                          static_cast<long long>(total), p.reference_params,
                          100.0 * (static_cast<double>(total) - p.reference_params) /
                              p.reference_params);
            std::cout << line;
        }
        return 0;
    }
    ModelConfig cfg = resolve_model_config(args.preset_name, args.config_path, nullptr);
    if (args.n > 0) cfg.n = args.n;
    if (args.classes > 0) cfg.num_classes = args.classes;
    cfg.validate();
    double reference = 0.0;
    std::string label = args.config_path;
    if (!args.preset_name.empty()) {
        const Preset& p = preset_or_throw(args.preset_name);
        label = p.name + " (" + p.description + ")";
        if (args.n == 0 && args.classes == 0) reference = p.reference_params;
    }
    print_breakdown(std::cout, label, cfg, reference);
    return 0;
}

// ---- train -----------------------------------------------------------

struct TrainArgs {
    std::string data_path, preset_name, config_path, out_dir;
    std::uint64_t seed = 0;
    std::int64_t epochs = 100;
    std::int64_t batch = 256;
    double lr = 0.0;
    std::int64_t patience = 0;
    std::int64_t checkpoint_every = 0;
    bool stratified = false;
};

int run_train(const TrainArgs& args) {
    const Dataset data = Dataset::load(args.data_path);
    const ModelConfig cfg = resolve_model_config(args.preset_name, args.config_path, &data);

    const std::uint64_t model_seed = derive_seed(args.seed, 1);
    const std::uint64_t train_seed = derive_seed(args.seed, 2);
    const std::uint64_t split_seed = derive_seed(args.seed, 3);

    Splits splits = split_dataset(data, split_seed, args.stratified);
    Model model(cfg, model_seed);

    TrainConfig tcfg;
    tcfg.epochs = args.epochs;
    tcfg.batch_size = args.batch;
    tcfg.lr = args.lr;
    tcfg.seed = train_seed;
    tcfg.patience = args.patience;
    tcfg.checkpoint_every = args.checkpoint_every;
    tcfg.validate();

    ensure_dir(args.out_dir);
    ordered_json manifest = {
        {"command", "train"},
        {"tool_version", kToolVersion},
        {"data", {{"path", args.data_path}, {"fnv1a", fnv1a_file(args.data_path)}}},
        {"model_config", cfg.to_json()},
        {"train_config", tcfg.to_json()},
        {"seed", args.seed},
        {"model_seed", model_seed},
        {"train_seed", train_seed},
        {"split_seed", split_seed},
        {"stratified", args.stratified},
        {"parameter_count", count_parameters(cfg).total},
    };
    write_text_file(args.out_dir + "/manifest.json", manifest.dump(2) + "\n");
    write_text_file(args.out_dir + "/splits.json", split_manifest(splits).dump() + "\n");

    std::cerr << "training " << (args.preset_name.empty() ? args.config_path : args.preset_name)
              << ": " << count_parameters(cfg).total << " parameters, "
              << splits.train.size() << "/" << splits.val.size() << "/" << splits.test.size()
              << " train/val/test frames, " << thread_count() << " worker thread(s)\n";

    const TrainResult result =
        train(model, splits.train, splits.val, tcfg, args.out_dir,
              [](const EpochStats& e) {
                  char line[160];
                  std::snprintf(line, sizeof(line),
                                "epoch %4lld  train %.4f  val %.4f  acc %.4f  f1 %.4f  (%.1fs)\n",
                                static_cast<long long>(e.epoch), e.train_loss, e.val_loss,
                                e.val_accuracy, e.val_macro_f1, e.seconds);
                  std::cerr << line;
              });

    write_text_file(args.out_dir + "/history.json", result.history_json().dump(2) + "\n");
    std::cerr << "best epoch " << result.best_epoch << " (val macro-F1 "
              << result.best_val_macro_f1 << "); checkpoint " << args.out_dir
              << "/best.ckpt\n";
    return 0;
}

// ---- eval ------------------------------------------------------------

struct EvalArgs {
    std::string data_path, checkpoint_path, out_dir;
    std::string split = "test";
    std::string splits_path;  // explicit split manifest
    std::uint64_t split_seed = 0;
    bool stratified = false;
    std::string edges_csv;
    std::string from_manifest;
};

int run_eval(EvalArgs args) {
    if (!args.from_manifest.empty()) {
        const ordered_json m = read_json_file(args.from_manifest);
        if (m.value("command", "") != "eval")
            throw ConfigError("'" + args.from_manifest + "' is not an eval manifest");
        args.data_path = m.at("data").at("path").get<std::string>();
        args.checkpoint_path = m.at("checkpoint").at("path").get<std::string>();
        const auto& split = m.at("split");
        const std::string mode = split.at("mode").get<std::string>();
        if (mode == "all") {
            args.split = "all";
            args.splits_path.clear();
        } else if (mode == "file") {
            args.split = split.at("name").get<std::string>();
            args.splits_path = split.at("path").get<std::string>();
        } else {
            args.split = split.at("name").get<std::string>();
            args.splits_path.clear();
            args.split_seed = split.at("seed").get<std::uint64_t>();
            args.stratified = split.value("stratified", false);
        }
        std::ostringstream edges;
        for (const auto& v : m.at("snr_edges")) {
            if (edges.tellp() > 0) edges << ',';
            edges << v.get<double>();
        }
        args.edges_csv = edges.str();
    }
    if (args.data_path.empty() || args.checkpoint_path.empty())
        throw ConfigError("eval needs --data and --checkpoint (or --from-manifest)");

    const Dataset data = Dataset::load(args.data_path);
    const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
    const ModelConfig cfg = ModelConfig::from_json(ckpt.model_config);
    Model model(cfg, 0);
    restore_parameters(model.params(), ckpt);

    DatasetView view;
    ordered_json split_desc;
    if (args.split == "all") {
        view = view_all(data);
        split_desc = {{"mode", "all"}};
    } else if (!args.splits_path.empty()) {
        Splits splits = splits_from_manifest(data, read_json_file(args.splits_path));
        view = pick_split(splits, args.split);
        split_desc = {{"mode", "file"}, {"name", args.split}, {"path", args.splits_path}};
    } else {
        Splits splits = split_dataset(data, args.split_seed, args.stratified);
        view = pick_split(splits, args.split);
        split_desc = {{"mode", "seeded"},
                      {"name", args.split},
                      {"seed", args.split_seed},
                      {"stratified", args.stratified}};
    }

    const std::vector<double> edges =
        args.edges_csv.empty() ? auto_edges(data.header()) : parse_edges(args.edges_csv);

    const EvalReport report = evaluate(model, view, edges);

    ensure_dir(args.out_dir);
    ordered_json manifest = {
        {"command", "eval"},
        {"tool_version", kToolVersion},
        {"data", {{"path", args.data_path}, {"fnv1a", fnv1a_file(args.data_path)}}},
        {"checkpoint",
         {{"path", args.checkpoint_path}, {"fnv1a", fnv1a_file(args.checkpoint_path)}}},
        {"split", split_desc},
        {"snr_edges", edges},
    };
    write_text_file(args.out_dir + "/manifest.json", manifest.dump(2) + "\n");
    write_text_file(args.out_dir + "/report.json", report.to_json().dump(2) + "\n");
    write_text_file(args.out_dir + "/confusion.csv", report.confusion_csv());
    write_text_file(args.out_dir + "/accuracy_vs_snr.csv", report.snr_accuracy_csv());

    char line[160];
    std::snprintf(line, sizeof(line),
                  "evaluated %lld frames: accuracy %.4f, macro-F1 %.4f (%.1fs)\n",
                  static_cast<long long>(report.frames), report.accuracy, report.macro_f1,
                  report.wall_seconds);
    std::cerr << line;
    return 0;
}

// ---- report ----------------------------------------------------------

struct ReportArgs {
    std::vector<std::string> runs;
    std::string out_dir;
};

int run_report(const ReportArgs& args) {
    ensure_dir(args.out_dir);
    std::ostringstream summary;
    summary << "run,frames,accuracy,macro_f1,parameter_count\n";
    std::ostringstream snr_csv;
    snr_csv << "run,snr_lo,snr_hi,count,correct,accuracy\n";
    std::vector<SvgSeries> snr_series;
    std::vector<SvgSeries> f1_points;
    bool any_report = false;

    for (const auto& run : args.runs) {
        const std::string label = fs::path(run).filename().string().empty()
                                      ? fs::path(run).parent_path().filename().string()
                                      : fs::path(run).filename().string();

        const std::string history_path = run + "/history.json";
        if (fs::exists(history_path)) {
            const ordered_json hist = read_json_file(history_path);
            std::ostringstream csv;
            csv << "epoch,train_loss,val_loss,val_accuracy,val_macro_f1\n";
            SvgSeries train_curve{label + " train", {}, false};
            SvgSeries val_curve{label + " val", {}, false};
            for (const auto& row : hist.at("epochs")) {
                const auto epoch = row.at("epoch").get<double>();
                csv << row.at("epoch") << ',' << row.at("train_loss") << ','
                    << row.at("val_loss") << ',' << row.at("val_accuracy") << ','
                    << row.at("val_macro_f1") << '\n';
                train_curve.points.emplace_back(epoch, row.at("train_loss").get<double>());
                val_curve.points.emplace_back(epoch, row.at("val_loss").get<double>());
            }
            write_text_file(args.out_dir + "/" + label + "-history.csv", csv.str());
            write_text_file(args.out_dir + "/" + label + "-loss.svg",
                            svg_line_chart(label + " loss", "epoch", "cross-entropy",
                                           {train_curve, val_curve}));
        }

        const std::string report_path = run + "/report.json";
        if (!fs::exists(report_path)) continue;
        any_report = true;
        const ordered_json rep = read_json_file(report_path);
        summary << label << ',' << rep.at("frames") << ',' << rep.at("accuracy") << ','
                << rep.at("macro_f1") << ',' << rep.at("parameter_count") << '\n';

        SvgSeries curve{label, {}, false};
        for (const auto& bin : rep.at("per_snr")) {
            snr_csv << label << ',' << bin.at("lo") << ',' << bin.at("hi") << ','
                    << bin.at("count") << ',' << bin.at("correct") << ','
                    << bin.at("accuracy") << '\n';
            if (bin.at("count").get<std::int64_t>() > 0)
                curve.points.emplace_back(
                    (bin.at("lo").get<double>() + bin.at("hi").get<double>()) / 2.0,
                    bin.at("accuracy").get<double>());
        }
        if (!curve.points.empty()) snr_series.push_back(curve);
        f1_points.push_back(SvgSeries{
            label,
            {{rep.at("parameter_count").get<double>(), rep.at("macro_f1").get<double>()}},
            true});

        const auto& names = rep.at("classes");
        std::vector<std::string> labels;
        for (const auto& v : names) labels.push_back(v.get<std::string>());
        std::vector<std::vector<double>> norm;
        for (const auto& row : rep.at("confusion")) {
            double total = 0.0;
            for (const auto& v : row) total += v.get<double>();
            std::vector<double> r;
            for (const auto& v : row) r.push_back(total > 0 ? v.get<double>() / total : 0.0);
            norm.push_back(r);
        }
        write_text_file(args.out_dir + "/" + label + "-confusion.svg",
                        svg_heatmap(label + " confusion (row-normalized)", labels, labels, norm));
    }

    write_text_file(args.out_dir + "/summary.csv", summary.str());
    if (any_report) {
        write_text_file(args.out_dir + "/accuracy_vs_snr.csv", snr_csv.str());
        if (!snr_series.empty())
            write_text_file(args.out_dir + "/accuracy_vs_snr.svg",
                            svg_line_chart("accuracy vs SNR", "SNR (dB)", "accuracy",
                                           snr_series));
        if (!f1_points.empty())
            write_text_file(args.out_dir + "/f1_vs_params.svg",
                            svg_line_chart("macro-F1 vs parameter count", "parameters",
                                           "macro-F1", f1_points));
    }
    std::cerr << "report written to " << args.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transformer-based automatic modulation recognition toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    GenArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic IQ dataset");
    gen->add_option("--spec", gen_args.spec_path, "dataset spec JSON")->required();
    gen->add_option("--out", gen_args.out_path, "output dataset file")->required();
    gen->add_option("--seed", gen_args.seed, "override the spec seed")
        ->each([&](const std::string&) { gen_args.seed_set = true; });

    TrainArgs train_args;
    CLI::App* tr = app.add_subcommand("train", "train a model on a dataset");
    tr->add_option("--data", train_args.data_path, "dataset file")->required();
    tr->add_option("--preset", train_args.preset_name, "architecture preset name");
    tr->add_option("--config", train_args.config_path, "model config JSON");
    tr->add_option("--out", train_args.out_dir, "run directory")->required();
    tr->add_option("--seed", train_args.seed, "master seed (default 0)");
    tr->add_option("--epochs", train_args.epochs, "training epochs (default 100)");
    tr->add_option("--batch", train_args.batch, "batch size (default 256)");
    tr->add_option("--lr", train_args.lr, "learning rate (default: by token size)");
    tr->add_option("--patience", train_args.patience, "early-stop patience, 0 = off");
    tr->add_option("--checkpoint-every", train_args.checkpoint_every,
                   "epochs between snapshots, 0 = off");
    tr->add_flag("--stratified", train_args.stratified, "stratify the split by class");

    EvalArgs eval_args;
    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->add_option("--data", eval_args.data_path, "dataset file");
    ev->add_option("--checkpoint", eval_args.checkpoint_path, "checkpoint file");
    ev->add_option("--out", eval_args.out_dir, "run directory")->required();
    ev->add_option("--split", eval_args.split, "train|val|test|all (default test)");
    ev->add_option("--splits", eval_args.splits_path, "split manifest JSON from a train run");
    ev->add_option("--split-seed", eval_args.split_seed, "seed for a fresh split (default 0)");
    ev->add_flag("--stratified", eval_args.stratified, "stratify a fresh split by class");
    ev->add_option("--snr-edges", eval_args.edges_csv,
                   "comma-separated bin edges in dB (default: from the dataset header)");
    ev->add_option("--from-manifest", eval_args.from_manifest,
                   "re-run a previous evaluation from its manifest.json");

    ParamsArgs params_args;
    CLI::App* pa = app.add_subcommand("params", "print the analytic parameter count");
    pa->add_option("--preset", params_args.preset_name, "architecture preset name");
    pa->add_option("--config", params_args.config_path, "model config JSON");
    pa->add_option("--n", params_args.n, "override the frame length");
    pa->add_option("--classes", params_args.classes, "override the class count");
    pa->add_flag("--all", params_args.all, "CSV of every preset vs its reference count");

    ReportArgs report_args;
    CLI::App* re = app.add_subcommand("report", "render CSV/SVG artifacts from run dirs");
    re->add_option("--run", report_args.runs, "run directory (repeatable)")->required();
    re->add_option("--out", report_args.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return run_gen(gen_args);
        if (tr->parsed()) return run_train(train_args);
        if (ev->parsed()) return run_eval(eval_args);
        if (pa->parsed()) return run_params(params_args);
        if (re->parsed()) return run_report(report_args);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
