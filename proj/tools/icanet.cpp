#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "icanet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace icanet;

namespace {

struct CommonOpts {
    bool small = false;
    std::string out_dir;

    Profile profile() const { return small ? Profile::small() : Profile::full(); }
};

void add_profile_flag(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_flag("--small", opts.small, "32-frame 112x112 profile instead of 79-frame 224x224");
}

fs::path ensure_out(const std::string& dir) {
    if (dir.empty()) throw CLI::ValidationError("--out", "output directory required");
    fs::create_directories(dir);
    return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

FusionWeights parse_fusion(const std::string& spec) {
    FusionWeights w;
    double vals[3];
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        std::size_t used = 0;
        try {
            vals[i] = std::stod(spec.substr(pos), &used);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--fusion", "expected R:F:A, got '" + spec + "'");
        }
        pos += used;
        if (i < 2) {
            if (pos >= spec.size() || spec[pos] != ':')
                throw CLI::ValidationError("--fusion", "expected R:F:A, got '" + spec + "'");
            ++pos;
        }
    }
    if (pos != spec.size()) throw CLI::ValidationError("--fusion", "trailing characters in '" + spec + "'");
    if (vals[0] < 0 || vals[1] < 0 || vals[2] < 0 || vals[0] + vals[1] + vals[2] <= 0)
        throw CLI::ValidationError("--fusion", "weights must be non-negative and not all zero");
    w.rgb = vals[0];
    w.flow = vals[1];
    w.audio = vals[2];
    return w;
}

struct WeightPaths {
    std::string rgb, flow, audio;
};

void add_weight_flags(CLI::App* cmd, WeightPaths& paths) {
    cmd->add_option("--weights-rgb", paths.rgb, "weight container for the appearance branch")->required();
    cmd->add_option("--weights-flow", paths.flow, "weight container for the motion branch")->required();
    cmd->add_option("--weights-audio", paths.audio, "weight container for the audio branch")->required();
}

BranchWeights load_branch_weights(const WeightPaths& paths) {
    BranchWeights w;
    log_line(2, "loading weights: " + paths.rgb);
    w.rgb = load_weights(paths.rgb);
    log_line(2, "loading weights: " + paths.flow);
    w.flow = load_weights(paths.flow);
    log_line(2, "loading weights: " + paths.audio);
    w.audio = load_weights(paths.audio);
    return w;
}

std::string scores_line(const char* tag, const ScoreVector& s) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-6s %.6f %.6f %.6f %.6f", tag, s.p[0], s.p[1], s.p[2], s.p[3]);
    return buf;
}

std::string distribution_text(const DistributionTable& t) {
    std::string out = "session   happy     sad  neutral   anger   total\n";
    char row[128];
    for (int s = 0; s < kNumSessions; ++s) {
        std::snprintf(row, sizeof(row), "%7d %7lld %7lld %8lld %7lld %7lld\n", s + 1,
                      static_cast<long long>(t.counts[s][0]), static_cast<long long>(t.counts[s][1]),
                      static_cast<long long>(t.counts[s][2]), static_cast<long long>(t.counts[s][3]),
                      static_cast<long long>(t.session_totals[s]));
        out += row;
    }
    std::snprintf(row, sizeof(row), "%7s %7lld %7lld %8lld %7lld %7lld\n", "all",
                  static_cast<long long>(t.class_totals[0]), static_cast<long long>(t.class_totals[1]),
                  static_cast<long long>(t.class_totals[2]), static_cast<long long>(t.class_totals[3]),
                  static_cast<long long>(t.total));
    out += row;
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"multimodal four-class emotion scorer: appearance, motion, and spectrogram branches with "
                 "decision-level fusion"};
    app.require_subcommand(1);

    // lfcc ------------------------------------------------------------------
    auto* lfcc_cmd = app.add_subcommand("lfcc", "extract cepstral features and render the spectrogram image");
    struct {
        CommonOpts common;
        std::string wav;
        std::string colormap;
    } lfcc_opts;
    lfcc_cmd->add_option("--wav", lfcc_opts.wav, "input wav (PCM16 mono 16 kHz)")->required();
    lfcc_cmd->add_option("--colormap", lfcc_opts.colormap, "load the 256-entry colormap from a file");
    lfcc_cmd->add_option("--out", lfcc_opts.common.out_dir, "output directory")->required();
    add_profile_flag(lfcc_cmd, lfcc_opts.common);
    lfcc_cmd->callback([&] {
        const fs::path out = ensure_out(lfcc_opts.common.out_dir);
        const AudioSignal audio = read_wav(lfcc_opts.wav);
        const LfccParams params;
        const Tensor features = lfcc_features(audio, params);
        WeightStore store;
        store.put("lfcc_features", features);
        save_weights(store, (out / "features.icaw").string());
        const Colormap map = lfcc_opts.colormap.empty() ? default_colormap() : load_colormap(lfcc_opts.colormap);
        write_ppm((out / "spectrogram.ppm").string(),
                  render_spectrogram(features, map, lfcc_opts.common.profile().audio_size));
        std::printf("features %s -> %s\n", shape_str(features.dims).c_str(), (out / "features.icaw").c_str());
        std::printf("spectrogram -> %s\n", (out / "spectrogram.ppm").c_str());
    });

    // flow ------------------------------------------------------------------
    auto* flow_cmd = app.add_subcommand("flow", "compute dense motion fields for a frame directory");
    struct {
        CommonOpts common;
        std::string frames;
    } flow_opts;
    flow_cmd->add_option("--frames", flow_opts.frames, "directory of frame_%05d.ppm images")->required();
    flow_cmd->add_option("--out", flow_opts.common.out_dir, "output directory")->required();
    add_profile_flag(flow_cmd, flow_opts.common);
    flow_cmd->callback([&] {
        const fs::path out = ensure_out(flow_opts.common.out_dir);
        const Profile profile = flow_opts.common.profile();
        const std::vector<Tensor> prepared = preprocess_frames(read_frames(flow_opts.frames), profile);
        const Tensor fields = flow_clip_tensor(prepared, LkParams{});
        WeightStore store;
        store.put("flow_fields", fields);
        save_weights(store, (out / "flow.icaw").string());
        std::printf("flow fields %s -> %s\n", shape_str(fields.dims).c_str(), (out / "flow.icaw").c_str());
    });

    // shapes ----------------------------------------------------------------
    auto* shapes_cmd = app.add_subcommand("shapes", "print per-layer output shapes of the three networks");
    struct {
        CommonOpts common;
        std::string variant = "three_ca";
    } shapes_opts;
    shapes_cmd->add_option("--vgg-variant", shapes_opts.variant, "three_ca or five_ca")
        ->check(CLI::IsMember({"three_ca", "five_ca"}));
    add_profile_flag(shapes_cmd, shapes_opts.common);
    shapes_cmd->callback([&] {
        const Profile p = shapes_opts.common.profile();
        const VggVariant variant = shapes_opts.variant == "five_ca" ? VggVariant::five_ca : VggVariant::three_ca;
        for (const NetworkDesc& net :
             {build_i3d(3, kNumClasses, p.frames, p.spatial), build_i3d(2, kNumClasses, p.frames, p.spatial),
              build_cavgg16(variant, kNumClasses, p.audio_size)}) {
            const auto rows = shape_trace(net, net.input_shape);
            std::fputs(format_shape_table(net, rows).c_str(), stdout);
            std::int64_t params = 0;
            for (const ParamInfo& info : network_params(net)) params += shape_volume(info.dims);
            std::printf("parameters %lld\n\n", static_cast<long long>(params));
        }
    });

    // synth -----------------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "generate a deterministic synthetic dataset and weights");
    struct {
        CommonOpts common;
        std::uint64_t seed = 1;
        int clips = 4;
        std::string variant = "three_ca";
    } synth_opts;
    synth_cmd->add_option("--seed", synth_opts.seed, "generator seed");
    synth_cmd->add_option("--clips", synth_opts.clips, "number of clips")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--vgg-variant", synth_opts.variant, "three_ca or five_ca")
        ->check(CLI::IsMember({"three_ca", "five_ca"}));
    synth_cmd->add_option("--out", synth_opts.common.out_dir, "output directory")->required();
    add_profile_flag(synth_cmd, synth_opts.common);
    synth_cmd->callback([&] {
        const fs::path out = ensure_out(synth_opts.common.out_dir);
        const Profile p = synth_opts.common.profile();
        const Manifest manifest = synth_manifest(synth_opts.seed, synth_opts.clips, (out / "clips").string());
        save_manifest(manifest, (out / "manifest.csv").string());
        std::printf("manifest with %d clips -> %s\n", synth_opts.clips, (out / "manifest.csv").c_str());
        const VggVariant variant = synth_opts.variant == "five_ca" ? VggVariant::five_ca : VggVariant::three_ca;
        const struct {
            const char* name;
            NetworkDesc net;
        } nets[3] = {{"weights_rgb.icaw", build_i3d(3, kNumClasses, p.frames, p.spatial)},
                     {"weights_flow.icaw", build_i3d(2, kNumClasses, p.frames, p.spatial)},
                     {"weights_audio.icaw", build_cavgg16(variant, kNumClasses, p.audio_size)}};
        for (const auto& [name, net] : nets) {
            save_weights(synth_weights(synth_opts.seed, net), (out / name).string());
            std::printf("%s weights -> %s\n", net.name.c_str(), (out / name).c_str());
        }
    });

    // infer -----------------------------------------------------------------
    auto* infer_cmd = app.add_subcommand("infer", "score one clip through all branches and fuse");
    struct {
        CommonOpts common;
        std::string frames, wav, fusion = "4:2:4", dump;
        WeightPaths weights;
    } infer_opts;
    infer_cmd->add_option("--frames", infer_opts.frames, "directory of frame_%05d.ppm images")->required();
    infer_cmd->add_option("--wav", infer_opts.wav, "clip audio")->required();
    add_weight_flags(infer_cmd, infer_opts.weights);
    infer_cmd->add_option("--fusion", infer_opts.fusion, "branch weight ratio R:F:A (default 4:2:4)");
    infer_cmd->add_option("--out", infer_opts.common.out_dir, "also write infer.json here");
    add_profile_flag(infer_cmd, infer_opts.common);
    infer_cmd->callback([&] {
        PipelineConfig config;
        config.profile = infer_opts.common.profile();
        config.fusion = parse_fusion(infer_opts.fusion);
        ClipRecord rec;
        rec.clip_id = "clip";
        rec.session = 1;
        rec.label = 0;
        rec.wav_path = infer_opts.wav;
        rec.frames_dir = infer_opts.frames;
        rec.num_frames = static_cast<int>(read_frames(infer_opts.frames).size());
        const BranchWeights weights = load_branch_weights(infer_opts.weights);
        const ClipScores scores = score_clip(rec, weights, config, default_colormap());
        const ScoreVector fused = fuse_scores(scores.rgb, scores.flow, scores.audio, config.fusion);
        const int pred = predict(fused);
        std::printf("         %8s %8s %8s %8s\n", kClassNames[0], kClassNames[1], kClassNames[2], kClassNames[3]);
        std::printf("%s\n", scores_line("rgb", scores.rgb).c_str());
        std::printf("%s\n", scores_line("flow", scores.flow).c_str());
        std::printf("%s\n", scores_line("audio", scores.audio).c_str());
        std::printf("%s\n", scores_line("fused", fused).c_str());
        std::printf("prediction %s\n", kClassNames[pred]);
        if (!infer_opts.common.out_dir.empty()) {
            const fs::path out = ensure_out(infer_opts.common.out_dir);
            ScoreDump dump;
            dump.clip_ids.push_back(rec.clip_id);
            dump.labels.push_back(0);
            dump.scores.push_back(scores);
            save_score_dump(dump, (out / "infer.json").string());
            std::printf("scores -> %s\n", (out / "infer.json").c_str());
        }
    });

    // eval ------------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a manifest and write accuracy reports");
    struct {
        CommonOpts common;
        std::string manifest, fusion = "4:2:4", colormap;
        WeightPaths weights;
        int jobs = 1;
        bool skip_bad = false;
        bool expect_iemocap = false;
        bool dump_scores = false;
        std::string variant = "three_ca";
    } eval_opts;
    eval_cmd->add_option("--manifest", eval_opts.manifest, "dataset manifest csv")->required();
    add_weight_flags(eval_cmd, eval_opts.weights);
    eval_cmd->add_option("--fusion", eval_opts.fusion, "branch weight ratio R:F:A (default 4:2:4)");
    eval_cmd->add_option("--jobs", eval_opts.jobs, "worker threads (results independent of this)")
        ->check(CLI::Range(1, 64));
    eval_cmd->add_option("--colormap", eval_opts.colormap, "load the 256-entry colormap from a file");
    eval_cmd->add_option("--vgg-variant", eval_opts.variant, "three_ca or five_ca")
        ->check(CLI::IsMember({"three_ca", "five_ca"}));
    eval_cmd->add_flag("--skip-bad", eval_opts.skip_bad, "report unreadable clips instead of aborting");
    eval_cmd->add_flag("--expect-iemocap", eval_opts.expect_iemocap,
                       "require the manifest to match the 5531-clip reference distribution");
    eval_cmd->add_flag("--dump-scores", eval_opts.dump_scores, "write per-clip branch scores for gridsearch");
    eval_cmd->add_option("--out", eval_opts.common.out_dir, "output directory")->required();
    add_profile_flag(eval_cmd, eval_opts.common);
    eval_cmd->callback([&] {
        const fs::path out = ensure_out(eval_opts.common.out_dir);
        const Manifest manifest = load_manifest(eval_opts.manifest);
        if (eval_opts.expect_iemocap) check_reference_distribution(clip_distribution(manifest));
        PipelineConfig config;
        config.profile = eval_opts.common.profile();
        config.fusion = parse_fusion(eval_opts.fusion);
        config.jobs = eval_opts.jobs;
        config.skip_bad = eval_opts.skip_bad;
        config.colormap_path = eval_opts.colormap;
        config.vgg_variant = eval_opts.variant == "five_ca" ? VggVariant::five_ca : VggVariant::three_ca;
        const BranchWeights weights = load_branch_weights(eval_opts.weights);
        const EvalReport report = run_eval(manifest, weights, config);
        const std::string text = eval_report_text(report);
        write_text(out / "report.txt", text);
        write_text(out / "report.json", eval_report_json(report));
        if (eval_opts.dump_scores) {
            ScoreDump dump;
            for (const ClipOutcome& c : report.clips) {
                if (!c.ok) continue;
                dump.clip_ids.push_back(c.record.clip_id);
                dump.labels.push_back(c.record.label);
                dump.scores.push_back(c.scores);
            }
            save_score_dump(dump, (out / "scores.json").string());
        }
        std::fputs(text.c_str(), stdout);
        std::printf("report -> %s\n", (out / "report.json").c_str());
    });

    // gridsearch --------------------------------------------------------------
    auto* grid_cmd = app.add_subcommand("gridsearch", "scan fusion weight triples against dumped scores");
    struct {
        CommonOpts common;
        std::string scores;
        int sum = 10;
    } grid_opts;
    grid_cmd->add_option("--scores", grid_opts.scores, "score dump from eval --dump-scores")->required();
    grid_cmd->add_option("--sum", grid_opts.sum, "integer triple sum of the grid (default 10)")
        ->check(CLI::Range(1, 100));
    grid_cmd->add_option("--out", grid_opts.common.out_dir, "output directory")->required();
    grid_cmd->callback([&] {
        const fs::path out = ensure_out(grid_opts.common.out_dir);
        const ScoreDump dump = load_score_dump(grid_opts.scores);
        std::vector<std::array<int, 3>> grid;
        for (int r = 0; r <= grid_opts.sum; ++r)
            for (int f = 0; f + r <= grid_opts.sum; ++f) grid.push_back({r, f, grid_opts.sum - r - f});
        const GridSearchResult result = weight_grid_search(dump.scores, dump.labels, grid);
        const std::string text = grid_report_text(result);
        write_text(out / "gridsearch.txt", text);
        write_text(out / "gridsearch.json", grid_report_json(result));
        std::fputs(text.c_str(), stdout);
        std::printf("report -> %s\n", (out / "gridsearch.json").c_str());
    });

    // validate-manifest --------------------------------------------------------
    auto* val_cmd = app.add_subcommand("validate-manifest", "parse a manifest and print its label distribution");
    struct {
        std::string manifest;
        bool expect_iemocap = false;
    } val_opts;
    val_cmd->add_option("--manifest", val_opts.manifest, "dataset manifest csv")->required();
    val_cmd->add_flag("--expect-iemocap", val_opts.expect_iemocap,
                      "require the manifest to match the 5531-clip reference distribution");
    val_cmd->callback([&] {
        const Manifest manifest = load_manifest(val_opts.manifest);
        const DistributionTable table = clip_distribution(manifest);
        std::fputs(distribution_text(table).c_str(), stdout);
        if (val_opts.expect_iemocap) {
            check_reference_distribution(table);
            std::printf("distribution matches the reference corpus\n");
        }
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
