#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "soundobj/audio_io.hpp"

namespace soundobj {

using cplx = std::complex<double>;
using cplxf = std::complex<float>;

/// Log-spaced bank of zero-phase Gaussian band-pass filters.
///
/// Filter k is centered at f_lo * 2^(k / filters_per_octave). Its magnitude
/// response is a Gaussian in log2-frequency whose -3 dB width spans
/// `bandwidth_spacings` filter spacings. Responses are real and even, so the
/// bank does not disturb phase.
class FilterBank {
public:
    static FilterBank design(double sample_rate, double f_lo, double f_hi, int filters_per_octave,
                             double bandwidth_spacings = 1.5);

    /// 22050 Hz, 64 Hz .. 10 kHz, 48 filters per octave.
    static FilterBank standard(double sample_rate = kCanonicalRate);

    std::size_t size() const noexcept { return centers_.size(); }
    std::span<const double> centers() const noexcept { return centers_; }
    double center(std::size_t k) const { return centers_.at(k); }
    double sample_rate() const noexcept { return sample_rate_; }
    double f_lo() const noexcept { return f_lo_; }
    double f_hi() const noexcept { return f_hi_; }
    int filters_per_octave() const noexcept { return filters_per_octave_; }
    double spacing_octaves() const noexcept { return 1.0 / filters_per_octave_; }
    double sigma_octaves() const noexcept { return sigma_octaves_; }

    /// Magnitude response of filter k at `freq` Hz (1 at the center).
    double gain(std::size_t k, double freq) const;

    /// Frequency range outside of which filter k is treated as exactly zero.
    double support_lo(std::size_t k) const;
    double support_hi(std::size_t k) const;

    /// Standard deviation of filter k's (Gaussian) impulse-response envelope.
    double time_sigma(std::size_t k) const;

    /// Zero padding needed so circular filtering matches linear filtering.
    std::size_t padding_samples() const;

    /// Raw size of the complex64 composite spectrum per second of audio.
    double bytes_per_second() const noexcept;

private:
    FilterBank() = default;

    std::vector<double> centers_;
    double sample_rate_ = 0.0;
    double f_lo_ = 0.0;
    double f_hi_ = 0.0;
    int filters_per_octave_ = 0;
    double sigma_octaves_ = 0.0;
};

/// One analysis instant: the complex response of every filter.
struct SpectrumFrame {
    double time;
    std::span<const cplxf> response;
};

/// Composite spectrum stored time-major (frame t is contiguous across filters).
class Spectrum {
public:
    Spectrum() = default;
    Spectrum(std::size_t frames, std::size_t bands, double sample_rate);

    std::size_t frames() const noexcept { return frames_; }
    std::size_t bands() const noexcept { return bands_; }
    double sample_rate() const noexcept { return sample_rate_; }
    bool empty() const noexcept { return frames_ == 0; }

    SpectrumFrame operator[](std::size_t t) const {
        return {static_cast<double>(t) / sample_rate_, frame(t)};
    }
    std::span<const cplxf> frame(std::size_t t) const { return {data_.data() + t * bands_, bands_}; }
    std::span<cplxf> frame(std::size_t t) { return {data_.data() + t * bands_, bands_}; }

    cplxf at(std::size_t t, std::size_t k) const { return data_[t * bands_ + k]; }
    float amplitude(std::size_t t, std::size_t k) const { return std::abs(at(t, k)); }
    float phase(std::size_t t, std::size_t k) const { return std::arg(at(t, k)); }

    std::size_t bytes() const noexcept { return data_.size() * sizeof(cplxf); }

private:
    std::vector<cplxf> data_;
    std::size_t frames_ = 0;
    std::size_t bands_ = 0;
    double sample_rate_ = 1.0;
};

/// Holds the forward FFT of one recording and computes band signals on demand.
class BandAnalyzer {
public:
    BandAnalyzer(const FilterBank& bank, const Recording& rec);
    ~BandAnalyzer();
    BandAnalyzer(const BandAnalyzer&) = delete;
    BandAnalyzer& operator=(const BandAnalyzer&) = delete;

    std::size_t length() const noexcept { return length_; }
    std::size_t fft_size() const noexcept { return fft_size_; }

    /// Analytic band signal of filter k, double precision, one value per input sample.
    std::vector<cplx> band(std::size_t k) const;

    /// Full composite spectrum, evaluated `chunk` filters at a time on up to
    /// `threads` workers (0 = hardware concurrency).
    Spectrum materialize(std::size_t chunk = 16, unsigned threads = 0) const;

private:
    struct Workspace;
    void band_into(std::size_t k, Workspace& ws, std::span<cplx> out) const;

    const FilterBank* bank_;
    std::size_t length_ = 0;
    std::size_t fft_size_ = 0;
    std::vector<cplx> spectrum_;  // bins 0..N/2 of the padded input
    void* plan_ = nullptr;        // backward c2c plan, shared read-only across workers
};

/// Composite spectrum of `rec`: exactly one frame per input sample.
Spectrum analyze(const FilterBank& bank, const Recording& rec, unsigned threads = 0);

/// Frequency from the wrapped phase advance between samples t-1 and t of filter k.
double instantaneous_frequency(const Spectrum& spectrum, std::size_t filter, std::size_t t);

/// Debug dump: time, filter, center, amplitude and instantaneous frequency.
void write_band_csv(std::ostream& out, const Spectrum& spectrum, const FilterBank& bank,
                    std::span<const std::size_t> filters, std::size_t decimation = 1);

/// Smallest 2^a 3^b 5^c >= n.
std::size_t smooth_fft_size(std::size_t n);

}  // namespace soundobj
