#include "soundobj/simd/kernels.hpp"

namespace soundobj::simd {

namespace {

void weight_spectrum(std::span<const cplx> in, std::span<const double> weights, std::span<cplx> out) {
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = cplx(in[i].real() * weights[i], in[i].imag() * weights[i]);
    }
}

void narrow_scaled(std::span<const cplx> in, double scale, std::span<cplxf> out) {
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = cplxf(static_cast<float>(in[i].real() * scale), static_cast<float>(in[i].imag() * scale));
    }
}

void norm_sq(std::span<const cplxf> in, std::span<float> out) {
    for (std::size_t i = 0; i < in.size(); ++i) {
        const float re = in[i].real();
        const float im = in[i].imag();
        out[i] = re * re + im * im;
    }
}

void residual_energy(std::span<const double> a, std::span<const double> b, double* err, double* ref) {
    double e = 0.0;
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        e += d * d;
        r += a[i] * a[i];
    }
    *err = e;
    *ref = r;
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", weight_spectrum, narrow_scaled, norm_sq, residual_energy};
    return table;
}

}  // namespace soundobj::simd
