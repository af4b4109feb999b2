#include "soundobj/filterbank.hpp"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

#include "soundobj/errors.hpp"
#include "soundobj/simd/kernels.hpp"

namespace soundobj {

namespace {

// Gaussian tails beyond this many sigmas are dropped (e^-24.5 ~ 2e-11).
constexpr double kSupportSigmas = 7.0;
constexpr double kPaddingSigmas = 6.0;

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
using fftw_buffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
fftw_buffer<T> fftw_alloc(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (p == nullptr) throw std::bad_alloc();
    return fftw_buffer<T>(p);
}

}  // namespace

std::size_t smooth_fft_size(std::size_t n) {
    if (n <= 1) return 1;
    std::size_t best = 1;
    while (best < n) best *= 2;
    for (std::size_t p5 = 1; p5 <= best; p5 *= 5) {
        for (std::size_t p3 = p5; p3 <= best; p3 *= 3) {
            std::size_t v = p3;
            while (v < n) v *= 2;
            best = std::min(best, v);
        }
    }
    return best;
}

FilterBank FilterBank::design(double sample_rate, double f_lo, double f_hi, int filters_per_octave,
                              double bandwidth_spacings) {
    if (!(sample_rate > 0.0) || !(f_lo > 0.0) || !(f_hi > f_lo) || !(f_hi < sample_rate / 2.0)) {
        throw Error(Errc::InvalidRange, "need 0 < f_lo < f_hi < sample_rate/2");
    }
    if (filters_per_octave < 1 || !(bandwidth_spacings > 0.0)) {
        throw Error(Errc::InvalidRange, "filters_per_octave and bandwidth must be positive");
    }
    FilterBank bank;
    bank.sample_rate_ = sample_rate;
    bank.f_lo_ = f_lo;
    bank.f_hi_ = f_hi;
    bank.filters_per_octave_ = filters_per_octave;
    // -3 dB (amplitude 1/sqrt 2) at half the bandwidth from the center.
    const double half_width = 0.5 * bandwidth_spacings / filters_per_octave;
    bank.sigma_octaves_ = half_width / std::sqrt(std::numbers::ln2);

    const double octaves = std::log2(f_hi / f_lo);
    const auto count = static_cast<std::size_t>(std::floor(filters_per_octave * octaves + 1e-9)) + 1;
    bank.centers_.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        bank.centers_[k] = f_lo * std::exp2(static_cast<double>(k) / filters_per_octave);
    }
    return bank;
}

FilterBank FilterBank::standard(double sample_rate) {
    return design(sample_rate, 64.0, 10000.0, 48);
}

double FilterBank::gain(std::size_t k, double freq) const {
    if (freq <= 0.0) return 0.0;
    const double d = std::log2(freq / centers_.at(k));
    return std::exp(-d * d / (2.0 * sigma_octaves_ * sigma_octaves_));
}

double FilterBank::support_lo(std::size_t k) const {
    return centers_.at(k) * std::exp2(-kSupportSigmas * sigma_octaves_);
}

double FilterBank::support_hi(std::size_t k) const {
    return centers_.at(k) * std::exp2(kSupportSigmas * sigma_octaves_);
}

double FilterBank::time_sigma(std::size_t k) const {
    const double sigma_hz = sigma_octaves_ * std::numbers::ln2 * centers_.at(k);
    return 1.0 / (2.0 * std::numbers::pi * sigma_hz);
}

std::size_t FilterBank::padding_samples() const {
    return static_cast<std::size_t>(std::ceil(kPaddingSigmas * time_sigma(0) * sample_rate_));
}

double FilterBank::bytes_per_second() const noexcept {
    return static_cast<double>(centers_.size()) * sample_rate_ * static_cast<double>(sizeof(cplxf));
}

Spectrum::Spectrum(std::size_t frames, std::size_t bands, double sample_rate)
    : data_(frames * bands), frames_(frames), bands_(bands), sample_rate_(sample_rate) {}

struct BandAnalyzer::Workspace {
    fftw_buffer<fftw_complex> in;
    fftw_buffer<fftw_complex> out;
    std::vector<double> weights;
    std::size_t dirty_lo = 0;
    std::size_t dirty_hi = 0;

    explicit Workspace(std::size_t n) : in(fftw_alloc<fftw_complex>(n)), out(fftw_alloc<fftw_complex>(n)) {
        std::fill_n(reinterpret_cast<double*>(in.get()), 2 * n, 0.0);
    }
};

BandAnalyzer::BandAnalyzer(const FilterBank& bank, const Recording& rec) : bank_(&bank), length_(rec.samples.size()) {
    if (rec.sample_rate != bank.sample_rate()) {
        throw Error(Errc::SampleRateMismatch, "recording at " + std::to_string(rec.sample_rate) + " Hz, bank at " +
                                                  std::to_string(bank.sample_rate()) + " Hz");
    }
    fft_size_ = smooth_fft_size(std::max<std::size_t>(length_ + bank.padding_samples(), 2));
    const std::size_t n = fft_size_;

    auto real_in = fftw_alloc<double>(n);
    auto half = fftw_alloc<fftw_complex>(n / 2 + 1);
    std::fill_n(real_in.get(), n, 0.0);
    {
        std::lock_guard lock(planner_mutex());
        fftw_plan fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_in.get(), half.get(), FFTW_ESTIMATE);
        std::copy(rec.samples.begin(), rec.samples.end(), real_in.get());
        fftw_execute(fwd);
        fftw_destroy_plan(fwd);

        Workspace probe(n);
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), probe.in.get(), probe.out.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    spectrum_.resize(n / 2 + 1);
    for (std::size_t b = 0; b <= n / 2; ++b) spectrum_[b] = cplx(half[b][0], half[b][1]);
}

BandAnalyzer::~BandAnalyzer() {
    if (plan_ != nullptr) {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    }
}

void BandAnalyzer::band_into(std::size_t k, Workspace& ws, std::span<cplx> out) const {
    const std::size_t n = fft_size_;
    const double bin_hz = bank_->sample_rate() / static_cast<double>(n);
    // Positive frequencies only (analytic signal); DC and Nyquist stay zero.
    const auto lo = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bank_->support_lo(k) / bin_hz)));
    const auto hi = std::min<std::size_t>(n / 2 - 1, static_cast<std::size_t>(std::floor(bank_->support_hi(k) / bin_hz)));

    auto* in = reinterpret_cast<cplx*>(ws.in.get());
    if (ws.dirty_hi > ws.dirty_lo) std::fill(in + ws.dirty_lo, in + ws.dirty_hi, cplx{});
    ws.dirty_lo = ws.dirty_hi = 0;

    if (hi >= lo) {
        const std::size_t count = hi - lo + 1;
        ws.weights.resize(count);
        const double center = bank_->center(k);
        const double inv_two_var = 1.0 / (2.0 * bank_->sigma_octaves() * bank_->sigma_octaves());
        for (std::size_t i = 0; i < count; ++i) {
            const double d = std::log2(static_cast<double>(lo + i) * bin_hz / center);
            ws.weights[i] = 2.0 * std::exp(-d * d * inv_two_var);
        }
        simd::active_kernels().weight_spectrum(std::span<const cplx>(spectrum_).subspan(lo, count), ws.weights,
                                               std::span<cplx>(in + lo, count));
        ws.dirty_lo = lo;
        ws.dirty_hi = hi + 1;
    }
    fftw_execute_dft(static_cast<fftw_plan>(plan_), ws.in.get(), ws.out.get());
    const auto* res = reinterpret_cast<const cplx*>(ws.out.get());
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = res[t] * scale;
}

std::vector<cplx> BandAnalyzer::band(std::size_t k) const {
    if (k >= bank_->size()) throw Error(Errc::IndexOutOfRange, "filter " + std::to_string(k));
    Workspace ws(fft_size_);
    std::vector<cplx> out(length_);
    band_into(k, ws, out);
    return out;
}

Spectrum BandAnalyzer::materialize(std::size_t chunk, unsigned threads) const {
    const std::size_t bands = bank_->size();
    Spectrum spectrum(length_, bands, bank_->sample_rate());
    if (length_ == 0 || bands == 0) return spectrum;
    chunk = std::max<std::size_t>(1, chunk);
    const std::size_t chunks = (bands + chunk - 1) / chunk;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));

    std::atomic<std::size_t> next{0};
    const auto& kernels = simd::active_kernels();
    const double scale = 1.0 / static_cast<double>(fft_size_);

    auto worker = [&] {
        Workspace ws(fft_size_);
        std::vector<cplxf> block(chunk * length_);
        for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
            const std::size_t k0 = c * chunk;
            const std::size_t width = std::min(chunk, bands - k0);
            for (std::size_t j = 0; j < width; ++j) {
                // band_into without the copy: run the FFT, then narrow straight from the output buffer.
                band_into(k0 + j, ws, {});
                const auto* res = reinterpret_cast<const cplx*>(ws.out.get());
                kernels.narrow_scaled(std::span<const cplx>(res, length_), scale,
                                      std::span<cplxf>(block.data() + j * length_, length_));
            }
            for (std::size_t t = 0; t < length_; ++t) {
                auto frame = spectrum.frame(t);
                for (std::size_t j = 0; j < width; ++j) frame[k0 + j] = block[j * length_ + t];
            }
        }
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    return spectrum;
}

Spectrum analyze(const FilterBank& bank, const Recording& rec, unsigned threads) {
    BandAnalyzer analyzer(bank, rec);
    return analyzer.materialize(16, threads);
}

double instantaneous_frequency(const Spectrum& spectrum, std::size_t filter, std::size_t t) {
    if (filter >= spectrum.bands() || t == 0 || t >= spectrum.frames()) {
        throw Error(Errc::IndexOutOfRange, "filter " + std::to_string(filter) + ", sample " + std::to_string(t));
    }
    constexpr double kMinAmplitude = 1e-9;
    const std::complex<double> cur(spectrum.at(t, filter));
    const std::complex<double> prev(spectrum.at(t - 1, filter));
    if (std::abs(cur) <= kMinAmplitude || std::abs(prev) <= kMinAmplitude) {
        throw Error(Errc::AmplitudeTooLow, "filter " + std::to_string(filter) + " is silent at sample " + std::to_string(t));
    }
    return std::arg(cur * std::conj(prev)) * spectrum.sample_rate() / (2.0 * std::numbers::pi);
}

void write_band_csv(std::ostream& out, const Spectrum& spectrum, const FilterBank& bank,
                    std::span<const std::size_t> filters, std::size_t decimation) {
    decimation = std::max<std::size_t>(1, decimation);
    out << "time,filter,center_hz,amplitude,inst_freq_hz\n";
    for (std::size_t k : filters) {
        if (k >= spectrum.bands()) throw Error(Errc::IndexOutOfRange, "filter " + std::to_string(k));
        for (std::size_t t = 1; t < spectrum.frames(); t += decimation) {
            const double amp = spectrum.amplitude(t, k);
            double freq = 0.0;
            if (amp > 1e-9 && spectrum.amplitude(t - 1, k) > 1e-9) freq = instantaneous_frequency(spectrum, k, t);
            out << static_cast<double>(t) / spectrum.sample_rate() << ',' << k << ',' << bank.center(k) << ',' << amp
                << ',' << freq << '\n';
        }
    }
}

}  // namespace soundobj
