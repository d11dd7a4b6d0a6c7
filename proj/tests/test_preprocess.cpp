#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "cleer/error.hpp"
#include "cleer/preprocess.hpp"
#include "oracles.hpp"

using namespace cleer;

namespace {

std::vector<double> tone(double freq, double fs, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / fs);
  return x;
}

// |H(e^{jw})| of the cascade, evaluated directly from the coefficients.
double magnitude(const Sos& sos, double freq, double fs) {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * M_PI * freq / fs);
  std::complex<double> h = 1.0;
  for (const auto& s : sos) h *= (s.b0 + s.b1 * z1 + s.b2 * z1 * z1) / (1.0 + s.a1 * z1 + s.a2 * z1 * z1);
  return std::abs(h);
}

double db(double ratio) { return 20.0 * std::log10(ratio); }

}  // namespace

TEST_CASE("bandpass response: unity in band, attenuated outside") {
  const auto sos = design_bandpass(FilterSpec::bandpass(1.0, 49.0, 200.0));
  CHECK(sos.size() == 4);
  for (double f : {5.0, 10.0, 25.0}) CHECK(std::abs(db(magnitude(sos, f, 200.0))) < 0.01);
  CHECK(db(magnitude(sos, 1.0, 200.0)) == doctest::Approx(-3.01).epsilon(0.02));
  CHECK(db(magnitude(sos, 49.0, 200.0)) == doctest::Approx(-3.01).epsilon(0.02));
  CHECK(db(magnitude(sos, 80.0, 200.0)) < -30.0);
  CHECK(db(magnitude(sos, 0.1, 200.0)) < -40.0);
}

TEST_CASE("bandpass matches frozen reference gains") {
  // dB gains of a 4th-order 1-49 Hz Butterworth bandpass at fs = 200, computed
  // once with an independent filter-design package and frozen here.
  const std::pair<double, double> ref[] = {{1.0, -3.01029996}, {2.0, -1.12684616e-02}, {25.0, -2.62170019e-03},
                                           {40.0, -3.74368399e-01}, {45.0, -1.30489177}, {49.0, -3.01029996}};
  const auto sos = design_bandpass(FilterSpec::bandpass(1.0, 49.0, 200.0));
  for (auto [f, want] : ref) CHECK(db(magnitude(sos, f, 200.0)) == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("bandpass poles are stable") {
  for (int order : {1, 2, 4, 6}) {
    for (const auto& s : design_bandpass(FilterSpec::bandpass(0.5, 45.0, 200.0, order))) {
      // Jury conditions for 1 + a1 z^-1 + a2 z^-2
      CHECK(std::abs(s.a2) < 1.0);
      CHECK(std::abs(s.a1) < 1.0 + s.a2);
    }
  }
}

TEST_CASE("notch response") {
  const auto sos = design_notch(FilterSpec::notch(60.0, 200.0));
  REQUIRE(sos.size() == 1);
  CHECK(magnitude(sos, 60.0, 200.0) < 1e-9);
  CHECK(std::abs(db(magnitude(sos, 25.0, 200.0))) < 0.1);
  CHECK(std::abs(db(magnitude(sos, 0.0, 200.0))) < 1e-9);
  // -3 dB points at center +- center / (2 Q)
  CHECK(db(magnitude(sos, 61.0, 200.0)) == doctest::Approx(-3.01).epsilon(0.05));
}

TEST_CASE("filter specs are validated") {
  CHECK_THROWS_AS(design_bandpass(FilterSpec::bandpass(10.0, 5.0, 200.0)), ConfigError);
  CHECK_THROWS_AS(design_bandpass(FilterSpec::bandpass(1.0, 120.0, 200.0)), ConfigError);
  CHECK_THROWS_AS(design_bandpass(FilterSpec::bandpass(1.0, 49.0, 200.0, 0)), ConfigError);
  CHECK_THROWS_AS(design_notch(FilterSpec::notch(0.0, 200.0)), ConfigError);
  CHECK_THROWS_AS(design_notch(FilterSpec::notch(60.0, 200.0, -1.0)), ConfigError);
}

TEST_CASE("filtfilt tone tests") {
  const double fs = 200.0;
  const std::size_t n = 4000;
  const auto bp = design(FilterSpec::bandpass(1.0, 49.0, fs));
  const auto nt = design(FilterSpec::notch(60.0, fs));

  const auto y25 = sos_filtfilt(bp, tone(25.0, fs, n));
  CHECK(std::abs(db(oracle::tone_amplitude(y25, 25.0, fs, 500, 3500))) < 0.2);

  const auto y60 = sos_filtfilt(nt, tone(60.0, fs, n));
  CHECK(db(oracle::tone_amplitude(y60, 60.0, fs, 500, 3500)) < -40.0);

  const auto y10 = sos_filtfilt(nt, tone(10.0, fs, n));
  CHECK(std::abs(db(oracle::tone_amplitude(y10, 10.0, fs, 0, n))) < 0.1);
}

TEST_CASE("filtfilt has zero phase") {
  const double fs = 200.0;
  const auto x = tone(12.0, fs, 2000);
  const auto y = sos_filtfilt(design(FilterSpec::bandpass(1.0, 49.0, fs)), x);
  for (std::size_t i = 600; i < 1400; ++i) CHECK(std::abs(y[i] - x[i]) < 1e-3);
}

TEST_CASE("causal filter matches a direct-form recursion") {
  const auto sos = design(FilterSpec::bandpass(2.0, 30.0, 200.0, 2));
  std::mt19937_64 rng(3);
  const auto x = oracle::random_values(300, rng);
  std::vector<double> ref = x;
  for (const auto& s : sos) {
    std::vector<double> out(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      double acc = s.b0 * ref[i];
      if (i >= 1) acc += s.b1 * ref[i - 1] - s.a1 * out[i - 1];
      if (i >= 2) acc += s.b2 * ref[i - 2] - s.a2 * out[i - 2];
      out[i] = acc;
    }
    ref = out;
  }
  const auto y = sos_filter(sos, x);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("average reference zeroes the channel mean") {
  std::mt19937_64 rng(4);
  const std::size_t channels = 7, samples = 500;
  const auto x = oracle::random_values(channels * samples, rng, 50.0);
  const auto y = average_reference(x, channels);
  for (std::size_t s = 0; s < samples; ++s) {
    double m = 0.0;
    for (std::size_t c = 0; c < channels; ++c) m += y[c * samples + s];
    CHECK(std::abs(m / channels) <= 1e-12);
  }
  CHECK_THROWS_AS(average_reference(std::vector<double>(10), 1), ConfigError);
}

TEST_CASE("preprocess chain keeps the reference and strips line noise") {
  const double fs = 200.0;
  Recording rec;
  rec.channels = 4;
  rec.samples = 4000;
  rec.label_stream = {0};
  rec.signal.resize(rec.channels * rec.samples);
  const auto t25 = tone(25.0, fs, rec.samples);
  const auto t60 = tone(60.0, fs, rec.samples);
  for (std::size_t c = 0; c < rec.channels; ++c)
    for (std::size_t s = 0; s < rec.samples; ++s) {
      rec.at(c, s) = (c == 1 ? t25[s] : 0.0) + t60[s] * (1.0 + 0.3 * c) + 5.0;
    }
  const auto out = preprocess_recording(rec, {});
  std::vector<double> ch1(out.signal.begin() + 4000, out.signal.begin() + 8000);
  // referenced 60 Hz amplitude on channel 1 is |1.3 - 1.45| = 0.15
  CHECK(db(oracle::tone_amplitude(ch1, 60.0, fs, 500, 3500) / 0.15) < -20.0);
  // after referencing, channel 1 holds 0.75 of the 25 Hz tone
  CHECK(oracle::tone_amplitude(ch1, 25.0, fs, 500, 3500) == doctest::Approx(0.75).epsilon(0.03));
  // bandpass and notch are linear and channel-wise, so the average reference survives
  for (std::size_t s = 0; s < rec.samples; s += 37) {
    double m = 0.0;
    for (std::size_t c = 0; c < rec.channels; ++c) m += out.at(c, s);
    CHECK(std::abs(m) < 1e-9);
  }
}
