#include "icanet/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little, "container formats are little-endian");

namespace fs = std::filesystem;

namespace icanet {

int class_index(const std::string& name) {
    for (int i = 0; i < kNumClasses; ++i)
        if (name == kClassNames[i]) return i;
    return -1;
}

namespace {

struct Reader {
    std::ifstream in;
    std::string path;

    Reader(const std::string& p, const char* op) : in(p, std::ios::binary), path(p) {
        if (!in) throw std::runtime_error(std::string(op) + ": cannot open " + p);
    }

    void bytes(void* dst, std::size_t n, const std::string& what) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw std::runtime_error(path + ": truncated while reading " + what);
    }
    std::uint32_t u32(const std::string& what) {
        std::uint32_t v;
        bytes(&v, 4, what);
        return v;
    }
    std::uint16_t u16(const std::string& what) {
        std::uint16_t v;
        bytes(&v, 2, what);
        return v;
    }
};

void put_u32(std::ofstream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_u16(std::ofstream& out, std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); }

}  // namespace

AudioSignal read_wav(const std::string& path) {
    Reader r(path, "read_wav");
    char tag[4];
    r.bytes(tag, 4, "RIFF tag");
    if (std::memcmp(tag, "RIFF", 4) != 0) throw std::runtime_error(path + ": RIFF tag: not a RIFF file");
    r.u32("RIFF size");
    r.bytes(tag, 4, "WAVE tag");
    if (std::memcmp(tag, "WAVE", 4) != 0) throw std::runtime_error(path + ": WAVE tag: not a WAVE file");

    bool have_fmt = false;
    std::vector<std::int16_t> raw;
    bool have_data = false;
    while (r.in.peek() != EOF) {
        r.bytes(tag, 4, "chunk id");
        const std::uint32_t size = r.u32("chunk size");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (size < 16) throw std::runtime_error(path + ": fmt chunk: too short");
            const std::uint16_t format = r.u16("audio format");
            const std::uint16_t channels = r.u16("channel count");
            const std::uint32_t rate = r.u32("sample rate");
            r.u32("byte rate");
            r.u16("block align");
            const std::uint16_t bits = r.u16("bits per sample");
            if (format != 1)
                throw std::runtime_error(path + ": audio format: expected 1 (PCM), got " + std::to_string(format));
            if (channels != 1)
                throw std::runtime_error(path + ": channel count: expected 1 (mono), got " + std::to_string(channels));
            if (rate != 16000)
                throw std::runtime_error(path + ": sample rate: expected 16000, got " + std::to_string(rate));
            if (bits != 16)
                throw std::runtime_error(path + ": bits per sample: expected 16, got " + std::to_string(bits));
            if (size > 16) r.in.seekg(size - 16, std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw std::runtime_error(path + ": data chunk: precedes fmt chunk");
            if (size % 2 != 0) throw std::runtime_error(path + ": data chunk: odd byte count for 16-bit samples");
            raw.resize(size / 2);
            if (size > 0) r.bytes(raw.data(), size, "sample data");
            have_data = true;
        } else {
            r.in.seekg(size, std::ios::cur);
        }
        if (size % 2 != 0 && std::memcmp(tag, "data", 4) != 0) r.in.seekg(1, std::ios::cur);
        if (!r.in) throw std::runtime_error(path + ": truncated chunk '" + std::string(tag, 4) + "'");
    }
    if (!have_fmt) throw std::runtime_error(path + ": fmt chunk: missing");
    if (!have_data) throw std::runtime_error(path + ": data chunk: missing");

    AudioSignal signal;
    signal.sample_rate = 16000;
    signal.samples.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) signal.samples[i] = static_cast<float>(raw[i]) / 32768.0f;
    return signal;
}

void write_wav(const std::string& path, const AudioSignal& signal) {
    if (signal.sample_rate != 16000) throw std::invalid_argument("write_wav: sample rate must be 16000");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_wav: cannot open " + path);
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);
    out.write("RIFF", 4);
    put_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(out, 16);
    put_u16(out, 1);
    put_u16(out, 1);
    put_u32(out, 16000);
    put_u32(out, 16000 * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.write("data", 4);
    put_u32(out, data_bytes);
    for (float v : signal.samples) {
        long q = std::lround(static_cast<double>(v) * 32768.0);
        q = std::min(32767l, std::max(-32768l, q));
        const std::int16_t s = static_cast<std::int16_t>(q);
        out.write(reinterpret_cast<const char*>(&s), 2);
    }
    if (!out) throw std::runtime_error("write_wav: write failed for " + path);
}

namespace {

int ppm_token(std::istream& in, const std::string& path, const char* what) {
    // Skips whitespace and # comments, then reads a decimal token.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c))
        throw std::runtime_error("read_ppm: " + path + ": malformed " + std::string(what));
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > 1 << 20) throw std::runtime_error("read_ppm: " + path + ": implausible " + std::string(what));
        c = in.get();
    }
    if (c != EOF) in.unget();
    return static_cast<int>(v);
}

}  // namespace

Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_ppm: cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '6') throw std::runtime_error("read_ppm: " + path + ": not a binary P6 file");
    const int w = ppm_token(in, path, "width");
    const int h = ppm_token(in, path, "height");
    const int maxval = ppm_token(in, path, "maxval");
    if (w < 1 || h < 1) throw std::runtime_error("read_ppm: " + path + ": bad dimensions");
    if (maxval != 255)
        throw std::runtime_error("read_ppm: " + path + ": maxval: expected 255, got " + std::to_string(maxval));
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw std::runtime_error("read_ppm: " + path + ": truncated pixel data");
    Tensor img(Shape{3, h, w});
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (std::int64_t i = 0; i < plane; ++i)
        for (int c = 0; c < 3; ++c) img.data[c * plane + i] = static_cast<float>(raw[i * 3 + c]) / 255.0f;
    return img;
}

void write_ppm(const std::string& path, const Tensor& image) {
    if (image.rank() != 3 || image.dims[0] != 3)
        throw std::invalid_argument("write_ppm: expected [3,H,W], got " + shape_str(image.dims));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_ppm: cannot open " + path);
    const int h = image.dims[1], w = image.dims[2];
    out << "P6\n" << w << " " << h << "\n255\n";
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    std::vector<unsigned char> raw(static_cast<std::size_t>(plane) * 3);
    for (std::int64_t i = 0; i < plane; ++i)
        for (int c = 0; c < 3; ++c) {
            const double v = std::min(1.0, std::max(0.0, static_cast<double>(image.data[c * plane + i])));
            raw[i * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("write_ppm: write failed for " + path);
}

std::vector<Tensor> read_frames(const std::string& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("read_frames: not a directory: " + dir);
    std::vector<int> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("frame_", 0) != 0) continue;
        const bool shaped = name.size() == 15 && name.substr(11) == ".ppm";
        const std::string digits = shaped ? name.substr(6, 5) : std::string();
        if (!shaped || !std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(c); }))
            throw std::runtime_error("read_frames: " + dir + ": stray frame file '" + name +
                                     "' does not match frame_%05d.ppm");
        found.push_back(std::stoi(digits));
    }
    if (found.empty()) throw std::runtime_error("read_frames: no frame_%05d.ppm files in " + dir);
    std::sort(found.begin(), found.end());
    for (std::size_t i = 0; i < found.size(); ++i)
        if (found[i] != static_cast<int>(i))
            throw std::runtime_error("read_frames: " + dir + ": frame index " + std::to_string(i) +
                                     " missing (next present is " + std::to_string(found[i]) + ")");
    std::vector<Tensor> frames;
    frames.reserve(found.size());
    char name[32];
    for (std::size_t i = 0; i < found.size(); ++i) {
        std::snprintf(name, sizeof(name), "frame_%05zu.ppm", i);
        frames.push_back(read_ppm((fs::path(dir) / name).string()));
        if (frames.back().dims != frames.front().dims)
            throw std::runtime_error("read_frames: " + dir + ": frame " + std::to_string(i) + " has size " +
                                     shape_str(frames.back().dims) + ", expected " + shape_str(frames.front().dims));
    }
    return frames;
}

Tensor nn_resize(const Tensor& image, int out_h, int out_w) {
    if (image.rank() != 3) throw std::invalid_argument("nn_resize: expected [C,H,W], got " + shape_str(image.dims));
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("nn_resize: bad output size");
    const int c_n = image.dims[0], h = image.dims[1], w = image.dims[2];
    Tensor out(Shape{c_n, out_h, out_w});
    const std::int64_t in_plane = static_cast<std::int64_t>(h) * w;
    const std::int64_t out_plane = static_cast<std::int64_t>(out_h) * out_w;
    for (int y = 0; y < out_h; ++y) {
        const int sy = static_cast<int>(static_cast<std::int64_t>(y) * h / out_h);
        for (int x = 0; x < out_w; ++x) {
            const int sx = static_cast<int>(static_cast<std::int64_t>(x) * w / out_w);
            for (int c = 0; c < c_n; ++c)
                out.data[c * out_plane + static_cast<std::int64_t>(y) * out_w + x] =
                    image.data[c * in_plane + static_cast<std::int64_t>(sy) * w + sx];
        }
    }
    return out;
}

Tensor center_crop_square(const Tensor& image) {
    if (image.rank() != 3)
        throw std::invalid_argument("center_crop_square: expected [C,H,W], got " + shape_str(image.dims));
    const int c_n = image.dims[0], h = image.dims[1], w = image.dims[2];
    const int side = std::min(h, w);
    const int y0 = (h - side) / 2, x0 = (w - side) / 2;
    Tensor out(Shape{c_n, side, side});
    const std::int64_t in_plane = static_cast<std::int64_t>(h) * w;
    const std::int64_t out_plane = static_cast<std::int64_t>(side) * side;
    for (int c = 0; c < c_n; ++c)
        for (int y = 0; y < side; ++y) {
            const float* src = image.data.data() + c * in_plane + (static_cast<std::int64_t>(y0 + y)) * w + x0;
            std::copy(src, src + side, out.data.data() + c * out_plane + static_cast<std::int64_t>(y) * side);
        }
    return out;
}

Tensor rgb_to_gray(const Tensor& image) {
    if (image.rank() != 3 || image.dims[0] != 3)
        throw std::invalid_argument("rgb_to_gray: expected [3,H,W], got " + shape_str(image.dims));
    const int h = image.dims[1], w = image.dims[2];
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    Tensor out(Shape{h, w});
    for (std::int64_t i = 0; i < plane; ++i)
        out.data[i] = static_cast<float>(0.299 * image.data[i] + 0.587 * image.data[plane + i] +
                                         0.114 * image.data[2 * plane + i]);
    return out;
}

std::vector<int> sample_indices(int available, int target) {
    if (available < 1 || target < 1) throw std::invalid_argument("sample_indices: counts must be positive");
    std::vector<int> idx(static_cast<std::size_t>(target));
    if (target == 1) {
        idx[0] = 0;
        return idx;
    }
    const std::int64_t d = target - 1;
    for (int i = 0; i < target; ++i) {
        const std::int64_t q = static_cast<std::int64_t>(i) * (available - 1);
        idx[i] = static_cast<int>((2 * q + d) / (2 * d));  // round half up
    }
    return idx;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

int parse_int(const std::string& s, const std::string& where, const char* field) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(where + ": " + field + ": not an integer: '" + s + "'");
    }
}

}  // namespace

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_manifest: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_manifest: " + path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string header = "clip_id,session,label,wav_path,frames_dir,num_frames";
    if (line != header)
        throw std::runtime_error("load_manifest: " + path + ": line 1: header must be '" + header + "'");

    Manifest manifest;
    std::map<std::string, int> seen;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = "load_manifest: " + path + ": line " + std::to_string(line_no);
        const auto fields = split_csv(line);
        if (fields.size() != 6)
            throw std::runtime_error(where + ": expected 6 fields, got " + std::to_string(fields.size()));
        ClipRecord rec;
        rec.clip_id = fields[0];
        if (rec.clip_id.empty()) throw std::runtime_error(where + ": clip_id: empty");
        if (auto it = seen.find(rec.clip_id); it != seen.end())
            throw std::runtime_error(where + ": clip_id: duplicate of line " + std::to_string(it->second));
        seen[rec.clip_id] = line_no;
        rec.session = parse_int(fields[1], where, "session");
        if (rec.session < 1 || rec.session > kNumSessions)
            throw std::runtime_error(where + ": session: expected 1.." + std::to_string(kNumSessions) + ", got " +
                                     std::to_string(rec.session));
        rec.label = class_index(fields[2]);
        if (rec.label < 0) {
            rec.label = parse_int(fields[2], where, "label");
            if (rec.label < 0 || rec.label >= kNumClasses)
                throw std::runtime_error(where + ": label: expected a class name or 0.." +
                                         std::to_string(kNumClasses - 1) + ", got '" + fields[2] + "'");
        }
        rec.wav_path = fields[3];
        if (rec.wav_path.empty()) throw std::runtime_error(where + ": wav_path: empty");
        rec.frames_dir = fields[4];
        if (rec.frames_dir.empty()) throw std::runtime_error(where + ": frames_dir: empty");
        rec.num_frames = parse_int(fields[5], where, "num_frames");
        if (rec.num_frames < 1) throw std::runtime_error(where + ": num_frames: must be positive");
        manifest.clips.push_back(std::move(rec));
    }
    return manifest;
}

void save_manifest(const Manifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_manifest: cannot open " + path);
    out << "clip_id,session,label,wav_path,frames_dir,num_frames\n";
    for (const ClipRecord& rec : manifest.clips)
        out << rec.clip_id << ',' << rec.session << ',' << kClassNames[rec.label] << ',' << rec.wav_path << ','
            << rec.frames_dir << ',' << rec.num_frames << '\n';
    if (!out) throw std::runtime_error("save_manifest: write failed for " + path);
}

DistributionTable clip_distribution(const Manifest& manifest) {
    DistributionTable t;
    for (const ClipRecord& rec : manifest.clips) {
        ++t.counts[rec.session - 1][rec.label];
        ++t.class_totals[rec.label];
        ++t.session_totals[rec.session - 1];
        ++t.total;
    }
    return t;
}

const DistributionTable& reference_distribution() {
    static const DistributionTable table = [] {
        DistributionTable t;
        const std::int64_t counts[kNumSessions][kNumClasses] = {
            {278, 194, 384, 229},
            {327, 197, 362, 137},
            {286, 305, 320, 240},
            {303, 143, 258, 327},
            {442, 245, 384, 170},
        };
        for (int s = 0; s < kNumSessions; ++s)
            for (int c = 0; c < kNumClasses; ++c) {
                t.counts[s][c] = counts[s][c];
                t.class_totals[c] += counts[s][c];
                t.session_totals[s] += counts[s][c];
                t.total += counts[s][c];
            }
        return t;
    }();
    return table;
}

void check_reference_distribution(const DistributionTable& table) {
    const DistributionTable& ref = reference_distribution();
    for (int s = 0; s < kNumSessions; ++s)
        for (int c = 0; c < kNumClasses; ++c)
            if (table.counts[s][c] != ref.counts[s][c])
                throw std::runtime_error("distribution: session " + std::to_string(s + 1) + " " + kClassNames[c] +
                                         ": expected " + std::to_string(ref.counts[s][c]) + " clips, got " +
                                         std::to_string(table.counts[s][c]));
    if (table.total != ref.total)
        throw std::runtime_error("distribution: total: expected " + std::to_string(ref.total) + ", got " +
                                 std::to_string(table.total));
}

const Tensor& WeightStore::get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw std::runtime_error("weights: missing tensor '" + name + "'");
    return it->second;
}

void WeightStore::put(const std::string& name, Tensor value) {
    if (name.empty()) throw std::invalid_argument("weights: empty tensor name");
    tensors_[name] = std::move(value);
}

void save_weights(const WeightStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_weights: cannot open " + path);
    out.write("ICAW", 4);
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, tensor] : store.tensors()) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
        for (int d : tensor.dims) put_u32(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(tensor.data.data()),
                  static_cast<std::streamsize>(tensor.data.size() * 4));
    }
    if (!out) throw std::runtime_error("save_weights: write failed for " + path);
}

WeightStore load_weights(const std::string& path) {
    Reader r(path, "load_weights");
    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, "ICAW", 4) != 0) throw std::runtime_error(path + ": magic: expected 'ICAW'");
    const std::uint32_t version = r.u32("version");
    if (version != 1) throw std::runtime_error(path + ": version: expected 1, got " + std::to_string(version));
    const std::uint32_t count = r.u32("tensor count");
    WeightStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32("name length of tensor " + std::to_string(i));
        if (name_len == 0 || name_len > 4096)
            throw std::runtime_error(path + ": tensor " + std::to_string(i) + ": implausible name length " +
                                     std::to_string(name_len));
        std::string name(name_len, '\0');
        r.bytes(name.data(), name_len, "name of tensor " + std::to_string(i));
        const std::uint32_t ndim = r.u32("rank of tensor '" + name + "'");
        if (ndim > 8)
            throw std::runtime_error(path + ": tensor '" + name + "': implausible rank " + std::to_string(ndim));
        Shape dims(ndim);
        std::int64_t volume = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            const std::uint32_t extent = r.u32("dims of tensor '" + name + "'");
            if (extent == 0 || extent > (1u << 28))
                throw std::runtime_error(path + ": tensor '" + name + "': bad extent " + std::to_string(extent));
            dims[d] = static_cast<int>(extent);
            volume *= extent;
        }
        Tensor t(dims);
        r.bytes(t.data.data(), static_cast<std::size_t>(volume) * 4, "data of tensor '" + name + "'");
        if (store.contains(name)) throw std::runtime_error(path + ": tensor '" + name + "': duplicate name");
        store.put(name, std::move(t));
    }
    if (r.in.peek() != EOF) throw std::runtime_error(path + ": trailing bytes after last tensor");
    return store;
}

}  // namespace icanet
