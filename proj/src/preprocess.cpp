#include "cleer/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "cleer/error.hpp"

namespace cleer {

namespace {

using cplx = std::complex<double>;

cplx section_response(const Biquad& s, cplx z1) {  // z1 = z^-1
  return (s.b0 + s.b1 * z1 + s.b2 * z1 * z1) / (1.0 + s.a1 * z1 + s.a2 * z1 * z1);
}

void check_stable(const Sos& sos) {
  for (const auto& s : sos) {
    // Poles of z^2 + a1 z + a2.
    const cplx disc = std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    for (cplx p : {(-s.a1 + disc) / 2.0, (-s.a1 - disc) / 2.0}) {
      if (!(std::abs(p) < 1.0)) {
        throw DesignError("unstable filter design: pole " + std::to_string(p.real()) + "+" +
                          std::to_string(p.imag()) + "i has magnitude " + std::to_string(std::abs(p)));
      }
    }
  }
}

double max_pole_radius(const Sos& sos) {
  double r = 0.0;
  for (const auto& s : sos) {
    const cplx disc = std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    r = std::max({r, std::abs((-s.a1 + disc) / 2.0), std::abs((-s.a1 - disc) / 2.0)});
  }
  return r;
}

// Filters in place with direct-form-II-transposed state per section.
void run_sos(const Sos& sos, std::vector<double>& x, std::vector<std::array<double, 2>> state) {
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const auto& s = sos[k];
    double s1 = state[k][0], s2 = state[k][1];
    for (double& v : x) {
      const double in = v;
      const double y = s.b0 * in + s1;
      s1 = s.b1 * in - s.a1 * y + s2;
      s2 = s.b2 * in - s.a2 * y;
      v = y;
    }
  }
}

// Per-section state that makes a unit step input look already settled.
std::vector<std::array<double, 2>> steady_state(const Sos& sos) {
  std::vector<std::array<double, 2>> zi(sos.size());
  double level = 1.0;  // DC level entering the section
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const auto& s = sos[k];
    const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = (s.b2 - s.a2 * g) * level;
    zi[k] = {(s.b1 - s.a1 * g) * level + z2, z2};
    level *= g;
  }
  return zi;
}

}  // namespace

FilterSpec FilterSpec::bandpass(double low, double high, double fs, int order) {
  FilterSpec s;
  s.kind = FilterKind::bandpass;
  s.low_hz = low;
  s.high_hz = high;
  s.sample_rate_hz = fs;
  s.order = order;
  return s;
}

FilterSpec FilterSpec::notch(double center, double fs, double quality) {
  FilterSpec s;
  s.kind = FilterKind::notch;
  s.notch_hz = center;
  s.sample_rate_hz = fs;
  s.quality = quality;
  return s;
}

void FilterSpec::validate() const {
  const double nyq = sample_rate_hz / 2.0;
  if (!(sample_rate_hz > 0.0)) throw ConfigError("sample rate must be positive");
  if (kind == FilterKind::bandpass) {
    if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < nyq)) {
      throw ConfigError("bandpass needs 0 < low < high < fs/2 (low " + std::to_string(low_hz) + ", high " +
                        std::to_string(high_hz) + ", fs/2 " + std::to_string(nyq) + ")");
    }
    if (order < 1 || order > 12) throw ConfigError("bandpass order must be in [1, 12]");
  } else {
    if (!(notch_hz > 0.0 && notch_hz < nyq)) {
      throw ConfigError("notch needs 0 < center < fs/2 (center " + std::to_string(notch_hz) + ", fs/2 " +
                        std::to_string(nyq) + ")");
    }
    if (!(quality > 0.0)) throw ConfigError("notch quality factor must be positive");
  }
}

Sos design_bandpass(const FilterSpec& spec) {
  spec.validate();
  const double fs = spec.sample_rate_hz;
  const int n = spec.order;
  const double wl = 2.0 * fs * std::tan(std::numbers::pi * spec.low_hz / fs);
  const double wh = 2.0 * fs * std::tan(std::numbers::pi * spec.high_hz / fs);
  const double w0 = std::sqrt(wl * wh);
  const double bw = wh - wl;

  std::vector<cplx> digital;
  for (int k = 0; k < n; ++k) {
    const cplx p = std::polar(1.0, std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n));
    const cplx pb = p * bw;
    const cplx root = std::sqrt(pb * pb - 4.0 * w0 * w0);
    for (cplx s : {(pb + root) / 2.0, (pb - root) / 2.0}) digital.push_back((2.0 * fs + s) / (2.0 * fs - s));
  }

  // Conjugate pairs first, then leftover real poles two at a time.
  std::vector<cplx> upper, real;
  for (auto p : digital) {
    if (std::abs(p.imag()) < 1e-12) {
      real.emplace_back(p.real(), 0.0);
    } else if (p.imag() > 0.0) {
      upper.push_back(p);
    }
  }
  std::sort(real.begin(), real.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  Sos sos;
  for (auto p : upper) sos.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
  for (std::size_t i = 0; i + 1 < real.size(); i += 2) {
    const double p1 = real[i].real(), p2 = real[i + 1].real();
    sos.push_back({1.0, 0.0, -1.0, -(p1 + p2), p1 * p2});
  }
  if (sos.size() != static_cast<std::size_t>(n)) throw DesignError("bandpass pole pairing failed");

  // Unity gain at the digital image of the analog center frequency.
  const double wc = 2.0 * std::atan(w0 / (2.0 * fs));
  const cplx z1 = std::polar(1.0, -wc);
  double mag = 1.0;
  for (const auto& s : sos) mag *= std::abs(section_response(s, z1));
  const double per_section = std::pow(mag, -1.0 / n);
  for (auto& s : sos) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }
  check_stable(sos);
  return sos;
}

Sos design_notch(const FilterSpec& spec) {
  spec.validate();
  const double w0 = 2.0 * std::numbers::pi * spec.notch_hz / spec.sample_rate_hz;
  const double bw = w0 / spec.quality;
  const double gain = 1.0 / (1.0 + std::tan(bw / 2.0));
  const double c = std::cos(w0);
  Sos sos{{gain, -2.0 * gain * c, gain, -2.0 * gain * c, 2.0 * gain - 1.0}};
  check_stable(sos);
  return sos;
}

Sos design(const FilterSpec& spec) {
  return spec.kind == FilterKind::bandpass ? design_bandpass(spec) : design_notch(spec);
}

std::vector<double> sos_filter(const Sos& sos, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  run_sos(sos, y, std::vector<std::array<double, 2>>(sos.size(), {0.0, 0.0}));
  return y;
}

std::vector<double> sos_filtfilt(const Sos& sos, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return {x.begin(), x.end()};

  // Pad long enough for the slowest pole to decay to ~e^-4.
  const double r = max_pole_radius(sos);
  const double tau = r > 0.0 ? -1.0 / std::log(r) : 0.0;
  std::size_t pad = std::max<std::size_t>(3 * (2 * sos.size() + 1), static_cast<std::size_t>(std::ceil(4.0 * tau)));
  pad = std::min(pad, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = steady_state(sos);
  auto scaled = [&zi](double x0) {
    auto s = zi;
    for (auto& st : s) {
      st[0] *= x0;
      st[1] *= x0;
    }
    return s;
  };
  run_sos(sos, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_sos(sos, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

namespace {

std::vector<double> filter_channels(std::span<const double> signal, std::size_t channels, const Sos& sos) {
  if (channels == 0 || signal.size() % channels != 0) {
    throw DimensionError("signal of " + std::to_string(signal.size()) + " values does not split into " +
                         std::to_string(channels) + " channels");
  }
  const std::size_t samples = signal.size() / channels;
  std::vector<double> out(signal.size());
  for (std::size_t c = 0; c < channels; ++c) {
    auto y = sos_filtfilt(sos, signal.subspan(c * samples, samples));
    std::copy(y.begin(), y.end(), out.begin() + static_cast<std::ptrdiff_t>(c * samples));
  }
  return out;
}

}  // namespace

std::vector<double> bandpass(std::span<const double> signal, std::size_t channels, const FilterSpec& spec) {
  if (spec.kind != FilterKind::bandpass) throw ConfigError("bandpass() given a notch spec");
  return filter_channels(signal, channels, design_bandpass(spec));
}

std::vector<double> notch(std::span<const double> signal, std::size_t channels, const FilterSpec& spec) {
  if (spec.kind != FilterKind::notch) throw ConfigError("notch() given a bandpass spec");
  return filter_channels(signal, channels, design_notch(spec));
}

std::vector<double> average_reference(std::span<const double> signal, std::size_t channels) {
  if (channels < 2) throw ConfigError("average reference needs at least 2 channels, got " + std::to_string(channels));
  if (signal.size() % channels != 0) {
    throw DimensionError("signal of " + std::to_string(signal.size()) + " values does not split into " +
                         std::to_string(channels) + " channels");
  }
  const std::size_t samples = signal.size() / channels;
  std::vector<double> out(signal.begin(), signal.end());
  for (std::size_t s = 0; s < samples; ++s) {
    double m = 0.0;
    for (std::size_t c = 0; c < channels; ++c) m += signal[c * samples + s];
    m /= static_cast<double>(channels);
    for (std::size_t c = 0; c < channels; ++c) out[c * samples + s] -= m;
  }
  return out;
}

Recording preprocess_recording(const Recording& rec, const PreprocessOptions& options) {
  rec.validate();
  Recording out = rec;
  const double fs = rec.sample_rate_hz;
  if (options.average_reference) out.signal = average_reference(out.signal, out.channels);
  out.signal = bandpass(out.signal, out.channels, FilterSpec::bandpass(options.low_hz, options.high_hz, fs, options.order));
  if (options.notch_hz > 0.0) {
    out.signal = notch(out.signal, out.channels, FilterSpec::notch(options.notch_hz, fs, options.notch_quality));
  }
  return out;
}

SegmentSet preprocess_segments(const SegmentSet& set, const PreprocessOptions& options) {
  set.validate();
  SegmentSet out = set;
  for (std::size_t i = 0; i < set.n; ++i) {
    Recording rec;
    rec.channels = set.c;
    rec.samples = set.t;
    rec.sample_rate_hz = set.sample_rate_hz;
    rec.label_stream = {set.labels[i]};
    rec.signal.resize(set.c * set.t);
    for (std::size_t s = 0; s < set.t; ++s)
      for (std::size_t c = 0; c < set.c; ++c) rec.at(c, s) = set.at(i, s, c);
    PreprocessOptions opts = options;
    if (set.c < 2) opts.average_reference = false;
    const Recording filtered = preprocess_recording(rec, opts);
    for (std::size_t s = 0; s < set.t; ++s)
      for (std::size_t c = 0; c < set.c; ++c)
        out.data[(i * set.t + s) * set.c + c] = static_cast<float>(filtered.at(c, s));
  }
  return out;
}

}  // namespace cleer
