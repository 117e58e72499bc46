#include "icanet/lfcc.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace icanet {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void validate(const LfccParams& p, int sample_rate, int frame_len, int hop_len) {
    if (sample_rate <= 0) throw std::invalid_argument("lfcc: sample rate must be positive");
    if (frame_len < 2) throw std::invalid_argument("lfcc: frame length must be at least 2 samples");
    if (hop_len < 1) throw std::invalid_argument("lfcc: hop must be at least 1 sample");
    if (!is_pow2(p.fft_size))
        throw std::invalid_argument("lfcc: fft_size " + std::to_string(p.fft_size) + " is not a power of two");
    if (p.fft_size < frame_len)
        throw std::invalid_argument("lfcc: fft_size " + std::to_string(p.fft_size) + " smaller than frame length " +
                                    std::to_string(frame_len));
    if (p.num_filters < 1) throw std::invalid_argument("lfcc: num_filters must be positive");
    if (p.num_ceps < 1 || p.num_ceps > p.num_filters)
        throw std::invalid_argument("lfcc: num_ceps must be in [1, num_filters]");
}

}  // namespace

int frame_length_samples(const LfccParams& p, int sample_rate) {
    return static_cast<int>(std::lround(p.frame_ms * sample_rate / 1000.0));
}

int hop_length_samples(const LfccParams& p, int sample_rate) {
    return static_cast<int>(std::lround(p.hop_ms * sample_rate / 1000.0));
}

int frame_count(int num_samples, int frame_len, int hop_len) {
    if (num_samples < frame_len)
        throw std::invalid_argument("lfcc: signal of " + std::to_string(num_samples) +
                                    " samples is shorter than one frame (" + std::to_string(frame_len) + ")");
    return 1 + (num_samples - frame_len) / hop_len;
}

void fft_radix2(std::vector<std::complex<double>>& buf) {
    const std::size_t n = buf.size();
    if (!is_pow2(static_cast<int>(n))) throw std::invalid_argument("fft_radix2: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(buf[i], buf[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wstep(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = buf[i + k];
                const std::complex<double> v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wstep;
            }
        }
    }
}

std::vector<std::vector<double>> linear_filterbank(int num_filters, int fft_size, int sample_rate) {
    if (num_filters < 1 || !is_pow2(fft_size) || sample_rate <= 0)
        throw std::invalid_argument("linear_filterbank: bad parameters");
    const int bins = fft_size / 2 + 1;
    const double delta = (sample_rate / 2.0) / (num_filters + 1);
    const double bin_hz = static_cast<double>(sample_rate) / fft_size;
    std::vector<std::vector<double>> bank(num_filters, std::vector<double>(bins, 0.0));
    for (int k = 0; k < num_filters; ++k) {
        const double left = k * delta, center = (k + 1) * delta, right = (k + 2) * delta;
        for (int b = 0; b < bins; ++b) {
            const double f = b * bin_hz;
            double w = 0.0;
            if (f > left && f < center)
                w = (f - left) / (center - left);
            else if (f == center)
                w = 1.0;
            else if (f > center && f < right)
                w = (right - f) / (right - center);
            bank[k][b] = w;
        }
    }
    return bank;
}

std::vector<double> dct_ortho(const std::vector<double>& row, int num_ceps) {
    const int n = static_cast<int>(row.size());
    if (n < 1 || num_ceps < 1 || num_ceps > n) throw std::invalid_argument("dct_ortho: bad sizes");
    std::vector<double> out(static_cast<std::size_t>(num_ceps));
    const double s0 = std::sqrt(1.0 / n), s = std::sqrt(2.0 / n);
    for (int j = 0; j < num_ceps; ++j) {
        double sum = 0.0;
        for (int k = 0; k < n; ++k)
            sum += row[k] * std::cos(std::numbers::pi * j * (2.0 * k + 1.0) / (2.0 * n));
        out[j] = (j == 0 ? s0 : s) * sum;
    }
    return out;
}

Tensor lfcc_features(const AudioSignal& signal, const LfccParams& params) {
    const int fs = signal.sample_rate;
    const int frame_len = frame_length_samples(params, fs);
    const int hop_len = hop_length_samples(params, fs);
    validate(params, fs, frame_len, hop_len);
    const int n = static_cast<int>(signal.samples.size());
    const int frames = frame_count(n, frame_len, hop_len);

    // y[t] = x[t] - a*x[t-1], x[-1] = 0.
    std::vector<double> emphasized(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        const double prev = t ? signal.samples[t - 1] : 0.0;
        emphasized[t] = signal.samples[t] - params.pre_emphasis * prev;
    }

    std::vector<double> window(static_cast<std::size_t>(frame_len));
    for (int i = 0; i < frame_len; ++i)
        window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (frame_len - 1));

    const auto bank = linear_filterbank(params.num_filters, params.fft_size, fs);
    const int bins = params.fft_size / 2 + 1;
    const int width = params.use_dct ? params.num_ceps : params.num_filters;

    Tensor features(Shape{frames, width});
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(params.fft_size));
    std::vector<double> power(static_cast<std::size_t>(bins));
    std::vector<double> energies(static_cast<std::size_t>(params.num_filters));
    for (int fr = 0; fr < frames; ++fr) {
        const int start = fr * hop_len;
        for (int i = 0; i < params.fft_size; ++i)
            buf[i] = i < frame_len ? emphasized[start + i] * window[i] : 0.0;
        fft_radix2(buf);
        for (int b = 0; b < bins; ++b) power[b] = std::norm(buf[b]);
        for (int k = 0; k < params.num_filters; ++k) {
            double e = 0.0;
            for (int b = 0; b < bins; ++b) e += bank[k][b] * power[b];
            energies[k] = std::log(e + params.log_floor);
        }
        if (params.use_dct) {
            const auto ceps = dct_ortho(energies, params.num_ceps);
            for (int j = 0; j < width; ++j) features.data[static_cast<std::size_t>(fr) * width + j] =
                static_cast<float>(ceps[j]);
        } else {
            for (int j = 0; j < width; ++j) features.data[static_cast<std::size_t>(fr) * width + j] =
                static_cast<float>(energies[j]);
        }
    }
    return features;
}

}  // namespace icanet
