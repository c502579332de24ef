#include "coagfrag/convolution.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace coagfrag {

ConvolutionPlan::ConvolutionPlan(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("ConvolutionPlan: n >= 1 required");
    while (m_ < 2 * n + 1) {
        m_ *= 2;
        ++log2m_;
    }
    twiddle_.resize(std::size_t(m_) / 2);
    for (int k = 0; k < m_ / 2; ++k) {
        const double ang = -2.0 * std::numbers::pi * k / m_;
        twiddle_[std::size_t(k)] = {std::cos(ang), std::sin(ang)};
    }
    bitrev_.resize(std::size_t(m_));
    for (int i = 0, j = 0; i < m_; ++i) {
        bitrev_[std::size_t(i)] = j;
        int bit = m_ >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j |= bit;
    }
    za_.resize(std::size_t(m_));
    zc_.resize(std::size_t(m_));
}

void ConvolutionPlan::fft(std::vector<std::complex<double>>& z, bool inverse) const {
    for (int i = 0; i < m_; ++i) {
        const int j = bitrev_[std::size_t(i)];
        if (i < j) std::swap(z[std::size_t(i)], z[std::size_t(j)]);
    }
    for (int len = 2; len <= m_; len <<= 1) {
        const int step = m_ / len;
        for (int start = 0; start < m_; start += len) {
            for (int k = 0; k < len / 2; ++k) {
                std::complex<double> w = twiddle_[std::size_t(k * step)];
                if (inverse) w = std::conj(w);
                const std::complex<double> u = z[std::size_t(start + k)];
                const std::complex<double> t = w * z[std::size_t(start + k + len / 2)];
                z[std::size_t(start + k)] = u + t;
                z[std::size_t(start + k + len / 2)] = u - t;
            }
        }
    }
}

void ConvolutionPlan::convolve_truncated(const double* a, const double* b, double* out) {
    // Pack both real sequences into one complex transform.
    za_.assign(std::size_t(m_), {0.0, 0.0});
    for (int i = 1; i <= n_; ++i) za_[std::size_t(i)] = {a[i], b[i]};
    fft(za_, false);

    // Spectra of a and b from the packed transform, multiplied in place.
    for (int k = 0; k <= m_ / 2; ++k) {
        const int kc = (m_ - k) & (m_ - 1);
        const std::complex<double> zk = za_[std::size_t(k)];
        const std::complex<double> zkc = std::conj(za_[std::size_t(kc)]);
        const std::complex<double> ak = 0.5 * (zk + zkc);
        const std::complex<double> bk = std::complex<double>(0.0, -0.5) * (zk - zkc);
        zc_[std::size_t(k)] = ak * bk;
        if (k != 0 && k != m_ / 2) zc_[std::size_t(kc)] = std::conj(zc_[std::size_t(k)]);
    }
    fft(zc_, true);

    const double inv = 1.0 / m_;
    out[0] = 0.0;
    if (n_ >= 1) out[1] = 0.0;
    for (int i = 2; i <= n_; ++i) out[i] = zc_[std::size_t(i)].real() * inv;
}

}
