#include "icanet/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "json.hpp"

using nlohmann::json;

namespace icanet {

std::vector<Tensor> preprocess_frames(const std::vector<Tensor>& frames, const Profile& profile) {
    if (frames.empty()) throw std::invalid_argument("preprocess_frames: no frames");
    const auto idx = sample_indices(static_cast<int>(frames.size()), profile.frames);
    std::vector<Tensor> out;
    out.reserve(idx.size());
    for (int i : idx)
        out.push_back(nn_resize(center_crop_square(frames[static_cast<std::size_t>(i)]), profile.spatial,
                                profile.spatial));
    return out;
}

Tensor rgb_clip_tensor(const std::vector<Tensor>& prepared) {
    if (prepared.empty()) throw std::invalid_argument("rgb_clip_tensor: no frames");
    const int t_n = static_cast<int>(prepared.size());
    const int h = prepared[0].dims[1], w = prepared[0].dims[2];
    Tensor out(Shape{3, t_n, h, w});
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (int t = 0; t < t_n; ++t) {
        const Tensor& f = prepared[static_cast<std::size_t>(t)];
        if (f.dims != Shape{3, h, w})
            throw std::invalid_argument("rgb_clip_tensor: frame " + std::to_string(t) + " has shape " +
                                        shape_str(f.dims));
        for (int c = 0; c < 3; ++c)
            std::copy(f.data.begin() + c * plane, f.data.begin() + (c + 1) * plane,
                      out.data.begin() + (static_cast<std::int64_t>(c) * t_n + t) * plane);
    }
    return out;
}

Tensor flow_clip_tensor(const std::vector<Tensor>& prepared, const LkParams& lk) {
    std::vector<Tensor> gray;
    gray.reserve(prepared.size());
    for (const Tensor& f : prepared) gray.push_back(rgb_to_gray(f));
    return flow_sequence(gray, lk, static_cast<int>(gray.size()));
}

Tensor audio_clip_image(const AudioSignal& audio, const LfccParams& lfcc, const Colormap& map, int size) {
    return render_spectrogram(lfcc_features(audio, lfcc), map, size);
}

ClipScores score_clip(const ClipRecord& record, const BranchWeights& weights, const PipelineConfig& config,
                      const Colormap& map) {
    const std::vector<Tensor> raw = read_frames(record.frames_dir);
    if (static_cast<int>(raw.size()) != record.num_frames)
        throw std::runtime_error("clip " + record.clip_id + ": manifest says " + std::to_string(record.num_frames) +
                                 " frames, directory has " + std::to_string(raw.size()));
    const std::vector<Tensor> prepared = preprocess_frames(raw, config.profile);
    const AudioSignal audio = read_wav(record.wav_path);

    const Profile& p = config.profile;
    const NetworkDesc rgb_net = build_i3d(3, kNumClasses, p.frames, p.spatial);
    const NetworkDesc flow_net = build_i3d(2, kNumClasses, p.frames, p.spatial);
    const NetworkDesc audio_net = build_cavgg16(config.vgg_variant, kNumClasses, p.audio_size);

    ClipScores scores;
    const Tensor rgb_out = forward(rgb_net, weights.rgb, rgb_clip_tensor(prepared));
    const Tensor flow_out = forward(flow_net, weights.flow, flow_clip_tensor(prepared, config.lk));
    const Tensor audio_out = forward(audio_net, weights.audio, audio_clip_image(audio, config.lfcc, map, p.audio_size));
    for (int c = 0; c < kNumClasses; ++c) {
        scores.rgb.p[c] = rgb_out.data[c];
        scores.flow.p[c] = flow_out.data[c];
        scores.audio.p[c] = audio_out.data[c];
    }
    return scores;
}

EvalReport run_eval(const Manifest& manifest, const BranchWeights& weights, const PipelineConfig& config) {
    if (manifest.clips.empty()) throw std::invalid_argument("run_eval: manifest has no clips");
    const Colormap map = config.colormap_path.empty() ? default_colormap() : load_colormap(config.colormap_path);

    EvalReport report;
    report.profile = config.profile;
    report.fusion = config.fusion;
    report.clips.resize(manifest.clips.size());

    const int jobs = std::max(1, std::min(config.jobs, 64));
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= manifest.clips.size()) return;
            ClipOutcome& outcome = report.clips[i];
            outcome.record = manifest.clips[i];
            try {
                outcome.scores = score_clip(outcome.record, weights, config, map);
                outcome.fused = fuse_scores(outcome.scores.rgb, outcome.scores.flow, outcome.scores.audio,
                                            config.fusion);
                outcome.prediction = predict(outcome.fused);
                outcome.ok = true;
            } catch (const std::exception& e) {
                outcome.ok = false;
                outcome.error = e.what();
            }
            log_line(2, "clip " + outcome.record.clip_id + (outcome.ok ? ": scored" : ": failed: " + outcome.error));
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    std::vector<int> preds, labels;
    for (const ClipOutcome& outcome : report.clips) {
        if (!outcome.ok) {
            if (!config.skip_bad) throw std::runtime_error("run_eval: " + outcome.record.clip_id + ": " + outcome.error);
            ++report.skipped;
            continue;
        }
        preds.push_back(outcome.prediction);
        labels.push_back(outcome.record.label);
        ++report.evaluated;
    }
    if (report.evaluated == 0) throw std::runtime_error("run_eval: every clip failed");
    report.matrix = confusion(preds, labels);
    report.acc = accuracy(preds, labels);
    report.per_class = per_class_accuracy(report.matrix);
    return report;
}

namespace {

std::string fixed(double v, int places = 4) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", places, v);
    return buf;
}

json scores_json(const ScoreVector& s) {
    json a = json::array();
    for (double v : s.p) a.push_back(v);
    return a;
}

ScoreVector scores_from_json(const json& a, const std::string& what) {
    if (!a.is_array() || a.size() != kNumClasses)
        throw std::runtime_error("score dump: " + what + ": expected " + std::to_string(kNumClasses) + " values");
    ScoreVector s;
    for (int c = 0; c < kNumClasses; ++c) s.p[c] = a[c].get<double>();
    return s;
}

}  // namespace

std::string eval_report_text(const EvalReport& report) {
    std::size_t id_w = 7;
    for (const ClipOutcome& c : report.clips) id_w = std::max(id_w, c.record.clip_id.size());
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };

    std::string out;
    out += "clips " + std::to_string(report.clips.size()) + "  evaluated " + std::to_string(report.evaluated) +
           "  skipped " + std::to_string(report.skipped) + "\n";
    out += "fusion rgb:flow:audio = " + fixed(report.fusion.rgb, 2) + ":" + fixed(report.fusion.flow, 2) + ":" +
           fixed(report.fusion.audio, 2) + "\n\n";
    out += pad("clip_id", id_w) + "  " + pad("label", 7) + "  " + pad("pred", 7) + "  status\n";
    for (const ClipOutcome& c : report.clips) {
        const std::string label = kClassNames[c.record.label];
        const std::string pred = c.ok ? kClassNames[c.prediction] : "-";
        const std::string status = c.ok ? (c.prediction == c.record.label ? "ok" : "miss") : "error: " + c.error;
        out += pad(c.record.clip_id, id_w) + "  " + pad(label, 7) + "  " + pad(pred, 7) + "  " + status + "\n";
    }
    out += "\naccuracy " + fixed(report.acc) + "\n";
    for (int c = 0; c < kNumClasses; ++c)
        out += pad(kClassNames[c], 7) + "  one-vs-rest " + fixed(report.per_class[c]) + "\n";
    out += "\nconfusion (rows truth, cols prediction)\n";
    out += pad("", 9);
    for (int c = 0; c < kNumClasses; ++c) out += pad(kClassNames[c], 9);
    out += "\n";
    for (int t = 0; t < kNumClasses; ++t) {
        out += pad(kClassNames[t], 9);
        for (int p = 0; p < kNumClasses; ++p) out += pad(std::to_string(report.matrix.counts[t][p]), 9);
        out += "\n";
    }
    return out;
}

std::string eval_report_json(const EvalReport& report) {
    json j;
    j["report_version"] = 1;
    j["profile"] = {{"frames", report.profile.frames},
                    {"spatial", report.profile.spatial},
                    {"audio", report.profile.audio_size}};
    j["fusion"] = {{"rgb", report.fusion.rgb}, {"flow", report.fusion.flow}, {"audio", report.fusion.audio}};
    j["evaluated"] = report.evaluated;
    j["skipped"] = report.skipped;
    j["accuracy"] = report.acc;
    json per_class;
    for (int c = 0; c < kNumClasses; ++c) per_class[kClassNames[c]] = report.per_class[c];
    j["per_class_accuracy"] = per_class;
    json matrix = json::array();
    for (int t = 0; t < kNumClasses; ++t) {
        json row = json::array();
        for (int p = 0; p < kNumClasses; ++p) row.push_back(report.matrix.counts[t][p]);
        matrix.push_back(row);
    }
    j["confusion"] = matrix;
    json clips = json::array();
    for (const ClipOutcome& c : report.clips) {
        json e;
        e["clip_id"] = c.record.clip_id;
        e["label"] = kClassNames[c.record.label];
        e["ok"] = c.ok;
        if (c.ok) {
            e["prediction"] = kClassNames[c.prediction];
            e["correct"] = c.prediction == c.record.label;
            e["scores"] = {{"rgb", scores_json(c.scores.rgb)},
                           {"flow", scores_json(c.scores.flow)},
                           {"audio", scores_json(c.scores.audio)},
                           {"fused", scores_json(c.fused)}};
        } else {
            e["error"] = c.error;
        }
        clips.push_back(e);
    }
    j["clips"] = clips;
    return j.dump(2) + "\n";
}

void save_score_dump(const ScoreDump& dump, const std::string& path) {
    if (dump.clip_ids.size() != dump.labels.size() || dump.clip_ids.size() != dump.scores.size())
        throw std::invalid_argument("save_score_dump: inconsistent arrays");
    json clips = json::array();
    for (std::size_t i = 0; i < dump.clip_ids.size(); ++i)
        clips.push_back({{"clip_id", dump.clip_ids[i]},
                         {"label", dump.labels[i]},
                         {"rgb", scores_json(dump.scores[i].rgb)},
                         {"flow", scores_json(dump.scores[i].flow)},
                         {"audio", scores_json(dump.scores[i].audio)}});
    json j;
    j["score_dump_version"] = 1;
    j["clips"] = clips;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_score_dump: cannot open " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("save_score_dump: write failed for " + path);
}

ScoreDump load_score_dump(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_score_dump: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_score_dump: " + path + ": " + e.what());
    }
    if (!j.contains("score_dump_version") || j["score_dump_version"] != 1)
        throw std::runtime_error("load_score_dump: " + path + ": score_dump_version: expected 1");
    ScoreDump dump;
    for (const json& e : j.at("clips")) {
        const std::string id = e.at("clip_id").get<std::string>();
        const int label = e.at("label").get<int>();
        if (label < 0 || label >= kNumClasses)
            throw std::runtime_error("load_score_dump: " + path + ": clip " + id + ": label out of range");
        dump.clip_ids.push_back(id);
        dump.labels.push_back(label);
        ClipScores s;
        s.rgb = scores_from_json(e.at("rgb"), id + ".rgb");
        s.flow = scores_from_json(e.at("flow"), id + ".flow");
        s.audio = scores_from_json(e.at("audio"), id + ".audio");
        dump.scores.push_back(s);
    }
    if (dump.clip_ids.empty()) throw std::runtime_error("load_score_dump: " + path + ": no clips");
    return dump;
}

std::string grid_report_text(const GridSearchResult& result) {
    std::string out = "rgb:flow:audio  accuracy\n";
    for (const auto& [triple, acc] : result.evaluated) {
        char row[64];
        std::snprintf(row, sizeof(row), "%2d:%2d:%2d        %.4f\n", triple[0], triple[1], triple[2], acc);
        out += row;
    }
    char best[96];
    std::snprintf(best, sizeof(best), "\nbest %g:%g:%g  accuracy %.4f\n", result.best.rgb, result.best.flow,
                  result.best.audio, result.best_accuracy);
    out += best;
    return out;
}

std::string grid_report_json(const GridSearchResult& result) {
    json grid = json::array();
    for (const auto& [triple, acc] : result.evaluated)
        grid.push_back({{"weights", {triple[0], triple[1], triple[2]}}, {"accuracy", acc}});
    json j;
    j["report_version"] = 1;
    j["grid"] = grid;
    j["best"] = {{"weights", {result.best.rgb, result.best.flow, result.best.audio}},
                 {"accuracy", result.best_accuracy}};
    return j.dump(2) + "\n";
}

int log_level() {
    static const int level = [] {
        const char* env = std::getenv("ICANET_LOG");
        if (!env) return 1;
        const std::string v(env);
        if (v == "error") return 0;
        if (v == "warn") return 1;
        if (v == "info") return 2;
        if (v == "debug") return 3;
        return 1;
    }();
    return level;
}

void log_line(int level, const std::string& message) {
    static std::mutex mu;
    if (level > log_level()) return;
    static const char* names[4] = {"error", "warn", "info", "debug"};
    std::lock_guard<std::mutex> lock(mu);
    std::fprintf(stderr, "[%s] %s\n", names[std::min(3, std::max(0, level))], message.c_str());
}

}  // namespace icanet
