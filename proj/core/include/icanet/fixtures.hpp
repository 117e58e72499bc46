#pragma once

#include <cstdint>
#include <string>

#include "icanet/data_io.hpp"
#include "icanet/nets.hpp"

namespace icanet {

// Deterministic synthetic inputs: everything below is a pure function of the
// seed, reproducible byte for byte.

struct SynthClip {
    std::string clip_id;
    int session = 1;
    int label = 0;
    std::string wav_path;
    std::string frames_dir;
    int num_frames = 0;
};

// Writes a textured moving-square frame sequence (64x64 PPM) plus a pure-tone
// wav under <out_dir>/<clip_id>/ and returns the paths.
SynthClip synth_clip(std::uint64_t seed, const std::string& out_dir);

// One clip per seed in [seed, seed + count); labels cycle with the seed.
Manifest synth_manifest(std::uint64_t seed, int count, const std::string& out_dir);

// Glorot-uniform init for every parameter of the network, each tensor drawn
// from its own stream derived from (seed, tensor name).
WeightStore synth_weights(std::uint64_t seed, const NetworkDesc& net);

}  // namespace icanet
