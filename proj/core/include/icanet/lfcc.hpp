#pragma once

#include <complex>
#include <vector>

#include "icanet/tensor.hpp"

namespace icanet {

struct AudioSignal {
    std::vector<float> samples;  // [-1,1]
    int sample_rate = 16000;
};

struct LfccParams {
    double frame_ms = 25.0;
    double hop_ms = 10.0;
    double pre_emphasis = 0.97;
    int fft_size = 512;      // power of two, >= frame length in samples
    int num_filters = 40;    // triangular filters equally spaced in Hz
    int num_ceps = 40;       // cepstra kept after the DCT
    bool use_dct = true;     // off: log filterbank energies pass through
    double log_floor = 1e-10;
};

int frame_length_samples(const LfccParams& p, int sample_rate);
int hop_length_samples(const LfccParams& p, int sample_rate);

// Frame count 1 + floor((n - frame) / hop); throws if n < frame.
int frame_count(int num_samples, int frame_len, int hop_len);

// In-place radix-2 decimation-in-time FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& buf);

// Rows [num_filters][fft_size/2+1]; filter k rises over
// [k*d, (k+1)*d] and falls over [(k+1)*d, (k+2)*d] with d = (fs/2)/(F+1).
std::vector<std::vector<double>> linear_filterbank(int num_filters, int fft_size, int sample_rate);

// Orthonormal DCT-II of each row, keeping num_ceps coefficients.
std::vector<double> dct_ortho(const std::vector<double>& row, int num_ceps);

// signal -> [frames, num_ceps] (or [frames, num_filters] when use_dct is
// off). Pre-emphasis, Hamming window, power spectrum, triangular filters
// spaced linearly in frequency, log(energy + floor), DCT.
Tensor lfcc_features(const AudioSignal& signal, const LfccParams& params);

}  // namespace icanet
