#include "soundobj/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

#include "soundobj/errors.hpp"

namespace soundobj {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
}

struct WavFormat {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
};

double decode_sample(const unsigned char* p, const WavFormat& fmt) {
    if (fmt.format == kFormatFloat) {
        float f;
        std::uint32_t raw = read_u32(p);
        std::memcpy(&f, &raw, sizeof f);
        return static_cast<double>(f);
    }
    switch (fmt.bits) {
        case 8: return (static_cast<double>(p[0]) - 128.0) / 128.0;
        case 16: return static_cast<double>(static_cast<std::int16_t>(read_u16(p))) / 32768.0;
        case 24: {
            std::int32_t v = static_cast<std::int32_t>(p[0]) | (static_cast<std::int32_t>(p[1]) << 8) |
                             (static_cast<std::int32_t>(p[2]) << 16);
            if (v & 0x800000) v -= 0x1000000;
            return static_cast<double>(v) / 8388608.0;
        }
        case 32: return static_cast<double>(static_cast<std::int32_t>(read_u32(p))) / 2147483648.0;
        default: return 0.0;
    }
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::UnreadableFile, "cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace

double Recording::peak() const noexcept {
    double p = 0.0;
    for (double s : samples) p = std::max(p, std::abs(s));
    return p;
}

bool is_canonical_rate(double sample_rate) noexcept {
    return sample_rate == kCanonicalRate || sample_rate == kAlternateRate;
}

void peak_normalize(Recording& rec, double peak) {
    const double current = rec.peak();
    if (current <= 0.0) return;
    const double gain = peak / current;
    for (double& s : rec.samples) s *= gain;
}

Recording load_wav(const std::filesystem::path& path, const LoadOptions& options) {
    const auto bytes = slurp(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw Error(Errc::UnreadableFile, path.string() + " is not a RIFF/WAVE file");
    }

    WavFormat fmt;
    bool have_fmt = false;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t size = read_u32(chunk + 4);
        const std::size_t body = pos + 8;
        const std::size_t available = bytes.size() - body;
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16 || available < 16) throw Error(Errc::UnreadableFile, "truncated fmt chunk");
            fmt.format = read_u16(bytes.data() + body);
            fmt.channels = read_u16(bytes.data() + body + 2);
            fmt.sample_rate = read_u32(bytes.data() + body + 4);
            fmt.bits = read_u16(bytes.data() + body + 14);
            if (fmt.format == kFormatExtensible && size >= 26 && available >= 26) {
                fmt.format = read_u16(bytes.data() + body + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = std::min<std::size_t>(size, available);
        }
        pos = body + size + (size & 1u);
    }
    if (!have_fmt || data == nullptr) throw Error(Errc::UnreadableFile, path.string() + " lacks fmt or data chunk");

    const bool int_ok = fmt.format == kFormatPcm && (fmt.bits == 8 || fmt.bits == 16 || fmt.bits == 24 || fmt.bits == 32);
    const bool float_ok = fmt.format == kFormatFloat && fmt.bits == 32;
    if (!(int_ok || float_ok) || fmt.channels < 1 || fmt.channels > 2 || fmt.sample_rate == 0) {
        throw Error(Errc::UnsupportedEncoding, "format " + std::to_string(fmt.format) + ", " +
                                                   std::to_string(fmt.bits) + " bits, " +
                                                   std::to_string(fmt.channels) + " channels");
    }

    const std::size_t bytes_per_sample = fmt.bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
    const std::size_t frames = data_size / frame_bytes;

    Recording rec;
    rec.source_id = path.stem().string();
    rec.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const unsigned char* frame = data + i * frame_bytes;
        double acc = 0.0;
        for (std::size_t c = 0; c < fmt.channels; ++c) acc += decode_sample(frame + c * bytes_per_sample, fmt);
        rec.samples[i] = acc / fmt.channels;
    }
    rec.sample_rate = static_cast<double>(fmt.sample_rate);

    if (!is_canonical_rate(rec.sample_rate)) {
        rec.samples = resample(rec.samples, rec.sample_rate, kCanonicalRate);
        rec.sample_rate = kCanonicalRate;
    }
    if (options.enforce_min_duration && rec.duration() < kMinDuration) {
        throw Error(Errc::TooShort, path.string() + " lasts " + std::to_string(rec.duration()) + " s");
    }
    if (options.normalize) {
        peak_normalize(rec);
    } else {
        for (double& s : rec.samples) s = std::clamp(s, -1.0, 1.0);
    }
    return rec;
}

void write_wav(const std::filesystem::path& path, const Recording& rec) {
    const auto n = static_cast<std::uint32_t>(rec.samples.size());
    std::vector<unsigned char> out;
    out.reserve(44 + 2 * static_cast<std::size_t>(n));
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + 2 * n);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, kFormatPcm);
    put_u16(out, 1);
    const auto rate = static_cast<std::uint32_t>(std::lround(rec.sample_rate));
    put_u32(out, rate);
    put_u32(out, rate * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, 2 * n);
    for (double s : rec.samples) {
        const double q = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::UnreadableFile, "cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error(Errc::UnreadableFile, "short write to " + path.string());
}

std::vector<double> resample(std::span<const double> input, double from_rate, double to_rate) {
    if (from_rate <= 0.0 || to_rate <= 0.0) throw Error(Errc::InvalidArgument, "sample rates must be positive");
    const auto fin = static_cast<long long>(std::llround(from_rate));
    const auto fout = static_cast<long long>(std::llround(to_rate));
    if (fin == fout) return {input.begin(), input.end()};

    const long long g = std::gcd(fin, fout);
    const long long up = fout / g;    // L
    const long long down = fin / g;   // M

    // Prototype low-pass expressed in input-sample units.
    constexpr int kZeroCrossings = 16;
    constexpr double kBeta = 8.6;
    const double cutoff = 0.95 * std::min(1.0, static_cast<double>(fout) / static_cast<double>(fin));
    const double half_width = kZeroCrossings / cutoff;
    const int taps_half = static_cast<int>(std::ceil(half_width));
    const int taps = 2 * taps_half + 1;
    const double i0_beta = std::cyl_bessel_i(0.0, kBeta);

    std::vector<double> table(static_cast<std::size_t>(up) * taps);
    for (long long phase = 0; phase < up; ++phase) {
        const double frac = static_cast<double>(phase) / static_cast<double>(up);
        double* row = table.data() + phase * taps;
        double sum = 0.0;
        for (int j = 0; j < taps; ++j) {
            const double u = static_cast<double>(j - taps_half) - frac;
            double h = 0.0;
            if (std::abs(u) < half_width) {
                const double x = cutoff * u;
                const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
                const double r = u / half_width;
                h = cutoff * sinc * std::cyl_bessel_i(0.0, kBeta * std::sqrt(1.0 - r * r)) / i0_beta;
            }
            row[j] = h;
            sum += h;
        }
        for (int j = 0; j < taps; ++j) row[j] /= sum;
    }

    const auto in_len = static_cast<long long>(input.size());
    const auto out_len = static_cast<long long>(
        std::llround(static_cast<double>(in_len) * static_cast<double>(up) / static_cast<double>(down)));
    std::vector<double> out(static_cast<std::size_t>(out_len));
    for (long long n = 0; n < out_len; ++n) {
        const long long num = n * down;
        const long long base = num / up;
        const long long phase = num % up;
        const double* row = table.data() + phase * taps;
        double acc = 0.0;
        for (int j = 0; j < taps; ++j) {
            const long long idx = base + j - taps_half;
            if (idx >= 0 && idx < in_len) acc += row[j] * input[static_cast<std::size_t>(idx)];
        }
        out[static_cast<std::size_t>(n)] = acc;
    }
    return out;
}

std::string_view to_string(WarningKind kind) noexcept {
    switch (kind) {
        case WarningKind::Clipping: return "Clipping";
        case WarningKind::Silence: return "Silence";
        case WarningKind::ShortDuration: return "ShortDuration";
    }
    return "Unknown";
}

std::vector<ValidationWarning> validate_recording(const Recording& rec) {
    std::vector<ValidationWarning> warnings;
    const double peak = rec.peak();

    // A run of >= 3 samples pinned at full scale (or at the recording's own
    // peak, which is where full scale lands after peak normalization).
    if (peak > 0.0) {
        const double level = std::min(1.0, peak) * (1.0 - 1e-9);
        std::size_t run = 0;
        std::size_t longest = 0;
        for (double s : rec.samples) {
            run = std::abs(s) >= level ? run + 1 : 0;
            longest = std::max(longest, run);
        }
        if (longest >= 3) {
            warnings.push_back({WarningKind::Clipping, std::to_string(longest) + " consecutive samples at full scale"});
        }
    }

    double energy = 0.0;
    for (double s : rec.samples) energy += s * s;
    const double rms = rec.samples.empty() ? 0.0 : std::sqrt(energy / static_cast<double>(rec.samples.size()));
    if (rms < 1e-4) warnings.push_back({WarningKind::Silence, "RMS " + std::to_string(rms)});

    if (rec.duration() < 6.0) {
        warnings.push_back({WarningKind::ShortDuration, "duration " + std::to_string(rec.duration()) + " s"});
    }
    return warnings;
}

}  // namespace soundobj
