#pragma once

#include <string>
#include <vector>

#include "icanet/colormap.hpp"
#include "icanet/data_io.hpp"
#include "icanet/fixtures.hpp"
#include "icanet/flow.hpp"
#include "icanet/fusion.hpp"
#include "icanet/lfcc.hpp"
#include "icanet/nets.hpp"

namespace icanet {

struct Profile {
    int frames = 79;
    int spatial = 224;
    int audio_size = 224;

    static Profile full() { return {79, 224, 224}; }
    static Profile small() { return {32, 112, 112}; }
};

struct PipelineConfig {
    Profile profile = Profile::full();
    LfccParams lfcc;
    LkParams lk;
    FusionWeights fusion;
    VggVariant vgg_variant = VggVariant::three_ca;
    int jobs = 1;
    bool skip_bad = false;
    std::string colormap_path;  // empty: built-in table
};

// Per-branch preprocessing. Frames are center-cropped to the min-side square
// and nearest-neighbor resized after temporal sampling to profile.frames.
std::vector<Tensor> preprocess_frames(const std::vector<Tensor>& frames, const Profile& profile);
Tensor rgb_clip_tensor(const std::vector<Tensor>& prepared);                       // [3,T,S,S]
Tensor flow_clip_tensor(const std::vector<Tensor>& prepared, const LkParams& lk);  // [2,T,S,S]
Tensor audio_clip_image(const AudioSignal& audio, const LfccParams& lfcc, const Colormap& map, int size);

struct BranchWeights {
    WeightStore rgb, flow, audio;
};

struct ClipOutcome {
    ClipRecord record;
    bool ok = false;
    std::string error;
    ClipScores scores;
    ScoreVector fused;
    int prediction = -1;
};

struct EvalReport {
    Profile profile;
    FusionWeights fusion;
    std::vector<ClipOutcome> clips;  // manifest order
    int evaluated = 0;
    int skipped = 0;
    ConfusionMatrix matrix;
    double acc = 0.0;
    std::array<double, kNumClasses> per_class{};
};

// Scores one clip through all three branches.
ClipScores score_clip(const ClipRecord& record, const BranchWeights& weights, const PipelineConfig& config,
                      const Colormap& map);

// Full manifest evaluation. A failing clip aborts the run unless
// config.skip_bad, in which case it is reported and left out of the metrics.
// Results are identical for any jobs count.
EvalReport run_eval(const Manifest& manifest, const BranchWeights& weights, const PipelineConfig& config);

std::string eval_report_text(const EvalReport& report);
std::string eval_report_json(const EvalReport& report);

// Score dumps connect eval/infer to the fusion grid search.
struct ScoreDump {
    std::vector<std::string> clip_ids;
    std::vector<int> labels;
    std::vector<ClipScores> scores;
};

void save_score_dump(const ScoreDump& dump, const std::string& path);
ScoreDump load_score_dump(const std::string& path);

std::string grid_report_text(const GridSearchResult& result);
std::string grid_report_json(const GridSearchResult& result);

// Grabs ICANET_LOG from the environment: error, warn (default), info, debug.
int log_level();
void log_line(int level, const std::string& message);

}  // namespace icanet
