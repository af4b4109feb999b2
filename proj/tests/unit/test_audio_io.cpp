#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "soundobj/audio_io.hpp"
#include "soundobj/errors.hpp"
#include "support.hpp"

using namespace soundobj;
using Catch::Approx;

namespace {

bool has_warning(const std::vector<ValidationWarning>& w, WarningKind kind) {
    return std::any_of(w.begin(), w.end(), [&](const ValidationWarning& v) { return v.kind == kind; });
}

}  // namespace

TEST_CASE("16-bit mono at the canonical rate passes through", "[audio_io]") {
    testing::TempDir dir("wav");
    const auto src = testing::sine(220.0, 0.5, 6.0);
    testing::write_pcm16(dir / "a.wav", {src.samples}, 22050);

    const Recording rec = load_wav(dir / "a.wav", {.normalize = false});
    CHECK(rec.sample_rate == 22050.0);
    CHECK(rec.samples.size() == 132300);
    CHECK(rec.duration() == Approx(6.0));
    CHECK(rec.source_id == "a");
    double worst = 0.0;
    for (std::size_t i = 0; i < rec.samples.size(); ++i) worst = std::max(worst, std::abs(rec.samples[i] - src.samples[i]));
    CHECK(worst < 1e-4);
}

TEST_CASE("loading normalizes the peak to 0.9", "[audio_io]") {
    testing::TempDir dir("wav");
    testing::write_pcm16(dir / "quiet.wav", {testing::sine(300.0, 0.1, 2.0).samples}, 22050);
    const Recording rec = load_wav(dir / "quiet.wav");
    CHECK(rec.peak() == Approx(0.9).epsilon(1e-12));
}

TEST_CASE("stereo 48 kHz becomes mono 22050 Hz with duration and level kept", "[audio_io]") {
    testing::TempDir dir("wav");
    const double f = 440.0;
    const auto left = testing::sine(f, 0.6, 3.0, 48000.0);
    auto right = left;
    for (double& v : right.samples) v *= 0.5;
    testing::write_pcm16(dir / "st.wav", {left.samples, right.samples}, 48000);

    const Recording rec = load_wav(dir / "st.wav", {.normalize = false});
    CHECK(rec.sample_rate == 22050.0);
    const double expected_len = 3.0 * 22050.0;
    CHECK(std::abs(static_cast<double>(rec.samples.size()) - expected_len) <= 1.0);

    // Reference: the mono mix evaluated directly on the new grid.
    const auto ideal = testing::sine(f, 0.45, 3.0, 22050.0);
    const std::size_t edge = 2205;
    std::span<const double> got(rec.samples.data() + edge, rec.samples.size() - 2 * edge);
    std::span<const double> want(ideal.samples.data() + edge, got.size());
    CHECK(testing::rms(got) == Approx(testing::rms(want)).epsilon(2e-3));
    double err = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) err = std::max(err, std::abs(got[i] - want[i]));
    CHECK(err < 5e-3);
}

TEST_CASE("resampling a tone preserves frequency and level", "[audio_io]") {
    const auto in = testing::sine(1000.0, 0.5, 1.0, 44100.0);
    const auto out = resample(in.samples, 44100.0, 22050.0);
    REQUIRE(out.size() == 22050);
    const auto ideal = testing::sine(1000.0, 0.5, 1.0, 22050.0);
    double err = 0.0;
    for (std::size_t i = 500; i + 500 < out.size(); ++i) err = std::max(err, std::abs(out[i] - ideal.samples[i]));
    CHECK(err < 2e-3);
}

TEST_CASE("WAV round trip through the library writer", "[audio_io]") {
    testing::TempDir dir("wav");
    Recording rec = testing::sine(180.0, 0.7, 1.5);
    write_wav(dir / "rt.wav", rec);
    const Recording back = load_wav(dir / "rt.wav", {.normalize = false});
    REQUIRE(back.samples.size() == rec.samples.size());
    double err = 0.0;
    for (std::size_t i = 0; i < rec.samples.size(); ++i) err = std::max(err, std::abs(back.samples[i] - rec.samples[i]));
    CHECK(err <= 1.0 / 32767.0);
}

TEST_CASE("files shorter than one second are rejected", "[audio_io]") {
    testing::TempDir dir("wav");
    testing::write_pcm16(dir / "short.wav", {testing::sine(200.0, 0.5, 0.5).samples}, 22050);
    try {
        load_wav(dir / "short.wav");
        FAIL("expected TooShort");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::TooShort);
    }
}

TEST_CASE("unreadable and unsupported files", "[audio_io]") {
    testing::TempDir dir("wav");
    {
        std::ofstream junk(dir / "junk.wav", std::ios::binary);
        junk << "not a riff file at all";
    }
    try {
        load_wav(dir / "junk.wav");
        FAIL("expected UnreadableFile");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnreadableFile);
    }
    try {
        load_wav(dir / "missing.wav");
        FAIL("expected UnreadableFile");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnreadableFile);
    }
}

TEST_CASE("validation warnings", "[audio_io]") {
    SECTION("clean 6 s vowel has none") {
        Recording rec = testing::sine(150.0, 0.5, 6.0);
        peak_normalize(rec);
        CHECK(validate_recording(rec).empty());
    }
    SECTION("silence") {
        Recording rec;
        rec.samples.assign(22050 * 6, 0.0);
        CHECK(has_warning(validate_recording(rec), WarningKind::Silence));
    }
    SECTION("hard clipping") {
        Recording rec = testing::sine(150.0, 1.5, 6.0);
        for (double& v : rec.samples) v = std::clamp(v, -1.0, 1.0);
        CHECK(has_warning(validate_recording(rec), WarningKind::Clipping));
    }
    SECTION("short recording") {
        CHECK(has_warning(validate_recording(testing::sine(150.0, 0.5, 2.0)), WarningKind::ShortDuration));
    }
}

TEST_CASE("peak normalization leaves silence alone", "[audio_io]") {
    Recording rec;
    rec.samples.assign(100, 0.0);
    peak_normalize(rec);
    CHECK(rec.peak() == 0.0);
}
