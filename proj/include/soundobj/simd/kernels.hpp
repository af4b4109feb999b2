#pragma once

// Data-parallel inner loops of the filter bank and tracker. Every kernel has a
// scalar reference implementation; wider variants are selected at runtime and
// must agree with the reference (bit-exact for the element-wise kernels).

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace soundobj::simd {

using cplx = std::complex<double>;
using cplxf = std::complex<float>;

struct KernelTable {
    std::string_view name;

    // out[i] = in[i] * weights[i]
    void (*weight_spectrum)(std::span<const cplx> in, std::span<const double> weights, std::span<cplx> out);

    // out[i] = complex<float>(in[i] * scale)
    void (*narrow_scaled)(std::span<const cplx> in, double scale, std::span<cplxf> out);

    // out[i] = |in[i]|^2
    void (*norm_sq)(std::span<const cplxf> in, std::span<float> out);

    // Returns sum (a-b)^2 in first, sum a^2 in second.
    void (*residual_energy)(std::span<const double> a, std::span<const double> b, double* err, double* ref);
};

const KernelTable& scalar_kernels();

/// nullptr when the build has no AVX2 variant or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// Widest supported table. Setting SOUNDOBJ_SIMD=scalar forces the reference path.
const KernelTable& active_kernels();

}  // namespace soundobj::simd
