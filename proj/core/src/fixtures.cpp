#include "icanet/fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include "icanet/rng.hpp"

namespace fs = std::filesystem;

namespace icanet {

namespace {

constexpr int kFrameSize = 64;
constexpr int kSquare = 16;

}  // namespace

SynthClip synth_clip(std::uint64_t seed, const std::string& out_dir) {
    SynthClip clip;
    char id[32];
    std::snprintf(id, sizeof(id), "clip_%016llx", static_cast<unsigned long long>(seed));
    clip.clip_id = id;
    clip.label = static_cast<int>(seed % 4);
    clip.session = static_cast<int>(seed % kNumSessions) + 1;
    clip.num_frames = 40 + static_cast<int>(seed % 9);

    const fs::path base = fs::path(out_dir) / clip.clip_id;
    const fs::path frames_dir = base / "frames";
    fs::create_directories(frames_dir);
    clip.frames_dir = frames_dir.string();

    // Static noise background and a textured square; both per-seed.
    SplitMix64 bg_rng(derive_seed(seed, "clip.background"));
    Tensor background(Shape{3, kFrameSize, kFrameSize});
    for (float& v : background.data) v = static_cast<float>(0.2 + 0.25 * bg_rng.next_unit());

    SplitMix64 tex_rng(derive_seed(seed, "clip.texture"));
    Tensor texture(Shape{3, kSquare, kSquare});
    const std::int64_t tex_plane = kSquare * kSquare;
    for (std::int64_t i = 0; i < tex_plane; ++i) {
        const float t = static_cast<float>(0.55 + 0.45 * tex_rng.next_unit());
        texture.data[i] = t;
        texture.data[tex_plane + i] = 1.0f - 0.5f * t;
        texture.data[2 * tex_plane + i] = 0.35f + 0.6f * (t - 0.55f);
    }

    SplitMix64 motion_rng(derive_seed(seed, "clip.motion"));
    const int speeds[4] = {-2, -1, 1, 2};
    int vx = speeds[motion_rng.next_below(4)];
    int vy = speeds[motion_rng.next_below(4)];
    int px = 8 + static_cast<int>(motion_rng.next_below(kFrameSize - kSquare - 16));
    int py = 8 + static_cast<int>(motion_rng.next_below(kFrameSize - kSquare - 16));

    const std::int64_t plane = kFrameSize * kFrameSize;
    char name[32];
    for (int f = 0; f < clip.num_frames; ++f) {
        Tensor frame = background;
        for (int y = 0; y < kSquare; ++y)
            for (int x = 0; x < kSquare; ++x)
                for (int c = 0; c < 3; ++c)
                    frame.data[c * plane + static_cast<std::int64_t>(py + y) * kFrameSize + (px + x)] =
                        texture.data[c * tex_plane + static_cast<std::int64_t>(y) * kSquare + x];
        std::snprintf(name, sizeof(name), "frame_%05d.ppm", f);
        write_ppm((frames_dir / name).string(), frame);

        px += vx;
        py += vy;
        if (px < 0 || px > kFrameSize - kSquare) {
            vx = -vx;
            px += 2 * vx;
        }
        if (py < 0 || py > kFrameSize - kSquare) {
            vy = -vy;
            py += 2 * vy;
        }
    }

    SplitMix64 tone_rng(derive_seed(seed, "clip.tone"));
    AudioSignal tone;
    tone.sample_rate = 16000;
    const double freq = 250.0 * (1 + tone_rng.next_below(12));  // 250..3000 Hz
    const int samples = 16000 + static_cast<int>(tone_rng.next_below(16000));
    tone.samples.resize(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i)
        tone.samples[i] = static_cast<float>(0.5 * std::sin(2.0 * std::numbers::pi * freq * i / 16000.0));
    clip.wav_path = (base / "audio.wav").string();
    write_wav(clip.wav_path, tone);
    return clip;
}

Manifest synth_manifest(std::uint64_t seed, int count, const std::string& out_dir) {
    if (count < 1) throw std::invalid_argument("synth_manifest: count must be positive");
    Manifest manifest;
    for (int i = 0; i < count; ++i) {
        const SynthClip clip = synth_clip(seed + static_cast<std::uint64_t>(i), out_dir);
        ClipRecord rec;
        rec.clip_id = clip.clip_id;
        rec.session = clip.session;
        rec.label = clip.label;
        rec.wav_path = clip.wav_path;
        rec.frames_dir = clip.frames_dir;
        rec.num_frames = clip.num_frames;
        manifest.clips.push_back(std::move(rec));
    }
    return manifest;
}

WeightStore synth_weights(std::uint64_t seed, const NetworkDesc& net) {
    WeightStore store;
    for (const ParamInfo& info : network_params(net)) {
        SplitMix64 rng(derive_seed(seed, net.name + "/" + info.name));
        const double a = std::sqrt(6.0 / static_cast<double>(info.fan_in + info.fan_out));
        Tensor t(info.dims);
        for (float& v : t.data) v = static_cast<float>(rng.next_uniform(-a, a));
        store.put(info.name, std::move(t));
    }
    return store;
}

}  // namespace icanet
