#pragma once

#include <complex>
#include <vector>

namespace coagfrag {

/// Radix-2 FFT-based linear convolution, sized once for sequences indexed by
/// cluster size 1..n. Instances hold scratch buffers; use one per thread.
class ConvolutionPlan {
public:
    explicit ConvolutionPlan(int n);

    int n() const { return n_; }

    /// out[i] = sum_{j=1}^{i-1} a[i-j]*b[j] for i = 1..n (out[0] and out[1]
    /// are 0). Arrays are 1-indexed with at least n+1 entries.
    void convolve_truncated(const double* a, const double* b, double* out);

private:
    int n_ = 0;
    int m_ = 1;             // transform size, power of two >= 2n+1
    int log2m_ = 0;
    std::vector<std::complex<double>> twiddle_;   // e^{-2pi i k/m}, k < m/2
    std::vector<int> bitrev_;
    std::vector<std::complex<double>> za_, zc_;

    void fft(std::vector<std::complex<double>>& z, bool inverse) const;
};

}
