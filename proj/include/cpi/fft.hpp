#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "cpi/errors.hpp"

namespace cpi {

using cvec = std::vector<std::complex<double>>;

namespace fft {

// FFTW plans are cached per (size, sign). Plans are created with
// FFTW_ESTIMATE so repeated runs are bit-identical, and FFTW_UNALIGNED so
// they can execute on any std::vector buffer. Plan creation is serialized;
// execution via the new-array interface is thread-safe.
class Plans {
  public:
    static Plans& instance() {
        static Plans p;
        return p;
    }

    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(n, sign);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        cvec dummy(n);
        auto* buf = reinterpret_cast<fftw_complex*>(dummy.data());
        fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw PreconditionError("fft: plan creation failed");
        cache_.emplace(key, p);
        return p;
    }

  private:
    Plans() = default;
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> cache_;
};

inline void transform_inplace(cvec& data, int sign) {
    fftw_plan p = Plans::instance().get(data.size(), sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(p, buf, buf);
}

/// Unnormalized DFT, X_k = sum_n x_n e^{-2 pi i n k / N}.
inline void forward_inplace(cvec& data) { transform_inplace(data, FFTW_FORWARD); }

/// Unnormalized inverse; divide by N to invert forward_inplace.
inline void backward_inplace(cvec& data) { transform_inplace(data, FFTW_BACKWARD); }

inline void inverse_inplace(cvec& data) {
    backward_inplace(data);
    const double s = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= s;
}

/// Angular frequency of FFT bin k for an N-point transform with sample
/// spacing dx, in the usual wrap-around ordering.
inline double bin_frequency(std::size_t k, std::size_t n, double dx) {
    const auto kk = static_cast<long long>(k);
    const auto nn = static_cast<long long>(n);
    const long long signed_k = (kk <= nn / 2) ? kk : kk - nn;
    return 2.0 * 3.14159265358979323846 * static_cast<double>(signed_k) /
           (static_cast<double>(n) * dx);
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Chirp-Z transform evaluating X_j = sum_{n=0}^{N-1} x_n e^{-i n (alpha + j theta)}
/// for j = 0..M-1, i.e. a DFT on an arbitrary uniform frequency ladder.
/// Bluestein factorization: n j = (n^2 + j^2 - (j-n)^2) / 2.
class Czt {
  public:
    Czt(std::size_t n_in, std::size_t m_out, double theta, double alpha)
        : n_(n_in), m_(m_out), theta_(theta), alpha_(alpha) {
        if (n_ == 0 || m_ == 0) throw PreconditionError("czt: empty transform");
        len_ = next_pow2(n_ + m_ - 1 + (n_ - 1));  // room for v indices -(N-1)..(M-1)
        chirp_in_.resize(n_);
        for (std::size_t n = 0; n < n_; ++n) {
            const auto nn = static_cast<double>(n);
            chirp_in_[n] = std::polar(1.0, -(alpha_ * nn + 0.5 * theta_ * nn * nn));
        }
        chirp_out_.resize(m_);
        for (std::size_t j = 0; j < m_; ++j) {
            const auto jj = static_cast<double>(j);
            chirp_out_[j] = std::polar(1.0, -0.5 * theta_ * jj * jj);
        }
        // v_m = e^{+i theta m^2 / 2}, laid out cyclically so that
        // (u * v)[j] = sum_n u_n v_{j-n} lands at index j.
        vhat_.assign(len_, {0.0, 0.0});
        for (long long m = -static_cast<long long>(n_) + 1;
             m <= static_cast<long long>(m_) - 1; ++m) {
            const auto mm = static_cast<double>(m);
            const std::size_t idx = static_cast<std::size_t>((m + static_cast<long long>(len_)) %
                                                             static_cast<long long>(len_));
            vhat_[idx] = std::polar(1.0, 0.5 * theta_ * mm * mm);
        }
        forward_inplace(vhat_);
    }

    std::size_t input_size() const { return n_; }
    std::size_t output_size() const { return m_; }

    /// out must have m_out elements; x must have n_in elements.
    void run(const cvec& x, cvec& out) const {
        if (x.size() != n_ || out.size() != m_) throw PreconditionError("czt: size mismatch");
        cvec work(len_, {0.0, 0.0});
        for (std::size_t n = 0; n < n_; ++n) work[n] = x[n] * chirp_in_[n];
        forward_inplace(work);
        for (std::size_t i = 0; i < len_; ++i) work[i] *= vhat_[i];
        inverse_inplace(work);
        for (std::size_t j = 0; j < m_; ++j) out[j] = work[j] * chirp_out_[j];
    }

  private:
    std::size_t n_, m_, len_;
    double theta_, alpha_;
    cvec chirp_in_, chirp_out_, vhat_;
};

}  // namespace fft
}  // namespace cpi
