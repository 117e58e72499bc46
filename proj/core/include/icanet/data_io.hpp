#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "icanet/lfcc.hpp"
#include "icanet/tensor.hpp"

namespace icanet {

inline constexpr std::array<const char*, 4> kClassNames = {"happy", "sad", "neutral", "anger"};
inline constexpr int kNumClasses = 4;
inline constexpr int kNumSessions = 5;

int class_index(const std::string& name);  // -1 when unknown

// --- audio -----------------------------------------------------------------

// Strict reader: RIFF/WAVE, PCM (format 1), 16-bit, mono, 16 kHz. Samples
// map to raw/32768. Violations throw naming the offending field.
AudioSignal read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioSignal& signal);

// --- images and frames -------------------------------------------------------

// Binary PPM (P6, maxval 255) <-> [3,H,W] in [0,1].
Tensor read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Tensor& image);

// Frames named frame_%05d.ppm, contiguous from 00000; gaps or stray frame
// files throw. All frames must share one size.
std::vector<Tensor> read_frames(const std::string& dir);

// Pixel helpers shared by the preprocessing stages. Nearest-neighbor
// resampling uses src = floor(i * src_extent / dst_extent).
Tensor nn_resize(const Tensor& image, int out_h, int out_w);  // [C,H,W]
Tensor center_crop_square(const Tensor& image);               // crop to min side
Tensor rgb_to_gray(const Tensor& image);                      // luma 0.299/0.587/0.114

// Evenly spaced indices with round-half-up: idx_i = round(i*(n-1)/(target-1)).
std::vector<int> sample_indices(int available, int target);

// --- dataset manifest ---------------------------------------------------------

struct ClipRecord {
    std::string clip_id;
    int session = 0;  // 1..5
    int label = 0;    // 0..3
    std::string wav_path;
    std::string frames_dir;
    int num_frames = 0;
};

struct Manifest {
    std::vector<ClipRecord> clips;
};

// CSV with header clip_id,session,label,wav_path,frames_dir,num_frames.
// label accepts a class name or index. Errors cite the line number.
Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& manifest, const std::string& path);

struct DistributionTable {
    std::array<std::array<std::int64_t, kNumClasses>, kNumSessions> counts{};
    std::array<std::int64_t, kNumClasses> class_totals{};
    std::array<std::int64_t, kNumSessions> session_totals{};
    std::int64_t total = 0;
};

DistributionTable clip_distribution(const Manifest& manifest);

// Reference distribution of the 5531-clip four-class corpus.
const DistributionTable& reference_distribution();

// Throws naming the first mismatching cell.
void check_reference_distribution(const DistributionTable& table);

// --- weights ---------------------------------------------------------------

class WeightStore {
public:
    bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
    const Tensor& get(const std::string& name) const;
    void put(const std::string& name, Tensor value);
    std::size_t size() const { return tensors_.size(); }
    const std::map<std::string, Tensor>& tensors() const { return tensors_; }

private:
    std::map<std::string, Tensor> tensors_;
};

// Container format: magic "ICAW", u32 version (1), u32 tensor count, then per
// tensor u32 name length + UTF-8 name, u32 ndim, u32 dims, raw f32 data.
// Little-endian throughout. Truncation errors name the tensor being read.
void save_weights(const WeightStore& store, const std::string& path);
WeightStore load_weights(const std::string& path);

}  // namespace icanet
