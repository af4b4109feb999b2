// Compiled with -mavx2 (and without -mfma, so products are rounded exactly as
// in the scalar reference). Only reached after a runtime CPU check.

#include "soundobj/simd/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>

namespace soundobj::simd::avx2 {

namespace {

void weight_spectrum(std::span<const cplx> in, std::span<const double> weights, std::span<cplx> out) {
    const std::size_t n = in.size();
    const auto* src = reinterpret_cast<const double*>(in.data());
    auto* dst = reinterpret_cast<double*>(out.data());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m128d w = _mm_loadu_pd(weights.data() + i);
        const __m256d ww = _mm256_permute4x64_pd(_mm256_castpd128_pd256(w), 0x50);
        const __m256d v = _mm256_loadu_pd(src + 2 * i);
        _mm256_storeu_pd(dst + 2 * i, _mm256_mul_pd(v, ww));
    }
    for (; i < n; ++i) out[i] = cplx(in[i].real() * weights[i], in[i].imag() * weights[i]);
}

void narrow_scaled(std::span<const cplx> in, double scale, std::span<cplxf> out) {
    const std::size_t n = in.size();
    const auto* src = reinterpret_cast<const double*>(in.data());
    auto* dst = reinterpret_cast<float*>(out.data());
    const __m256d s = _mm256_set1_pd(scale);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d v = _mm256_mul_pd(_mm256_loadu_pd(src + 2 * i), s);
        _mm_storeu_ps(dst + 2 * i, _mm256_cvtpd_ps(v));
    }
    for (; i < n; ++i) {
        out[i] = cplxf(static_cast<float>(in[i].real() * scale), static_cast<float>(in[i].imag() * scale));
    }
}

void norm_sq(std::span<const cplxf> in, std::span<float> out) {
    const std::size_t n = in.size();
    const auto* src = reinterpret_cast<const float*>(in.data());
    const __m256i order = _mm256_setr_epi32(0, 1, 4, 5, 2, 3, 6, 7);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 a = _mm256_loadu_ps(src + 2 * i);
        const __m256 b = _mm256_loadu_ps(src + 2 * i + 8);
        const __m256 sums = _mm256_hadd_ps(_mm256_mul_ps(a, a), _mm256_mul_ps(b, b));
        _mm256_storeu_ps(out.data() + i, _mm256_permutevar8x32_ps(sums, order));
    }
    for (; i < n; ++i) {
        const float re = in[i].real();
        const float im = in[i].imag();
        out[i] = re * re + im * im;
    }
}

void residual_energy(std::span<const double> a, std::span<const double> b, double* err, double* ref) {
    const std::size_t n = a.size();
    __m256d e = _mm256_setzero_pd();
    __m256d r = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(a.data() + i);
        const __m256d d = _mm256_sub_pd(va, _mm256_loadu_pd(b.data() + i));
        e = _mm256_add_pd(e, _mm256_mul_pd(d, d));
        r = _mm256_add_pd(r, _mm256_mul_pd(va, va));
    }
    alignas(32) double le[4];
    alignas(32) double lr[4];
    _mm256_store_pd(le, e);
    _mm256_store_pd(lr, r);
    double es = (le[0] + le[1]) + (le[2] + le[3]);
    double rs = (lr[0] + lr[1]) + (lr[2] + lr[3]);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        es += d * d;
        rs += a[i] * a[i];
    }
    *err = es;
    *ref = rs;
}

}  // namespace

const KernelTable& table() {
    static const KernelTable t{"avx2", weight_spectrum, narrow_scaled, norm_sq, residual_energy};
    return t;
}

}  // namespace soundobj::simd::avx2

#endif
