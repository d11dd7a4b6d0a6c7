#pragma once

#include <array>
#include <span>
#include <vector>

#include "cleer/segments.hpp"

namespace cleer {

enum class FilterKind { bandpass, notch };

struct FilterSpec {
  FilterKind kind = FilterKind::bandpass;
  double low_hz = 1.0;
  double high_hz = 49.0;
  double notch_hz = 60.0;
  double quality = 30.0;  // notch only
  int order = 4;          // bandpass prototype order
  double sample_rate_hz = 200.0;

  static FilterSpec bandpass(double low, double high, double fs, int order = 4);
  static FilterSpec notch(double center, double fs, double quality = 30.0);
  void validate() const;
};

/// One biquad: b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

using Sos = std::vector<Biquad>;

/// Digital Butterworth bandpass as cascaded biquads (bilinear transform with
/// pre-warping; `order` is the lowpass prototype order, so 2*order poles).
Sos design_bandpass(const FilterSpec& spec);

/// Second-order notch with bandwidth center / quality.
Sos design_notch(const FilterSpec& spec);

Sos design(const FilterSpec& spec);

/// Causal single pass with zero initial state.
std::vector<double> sos_filter(const Sos& sos, std::span<const double> x);

/// Zero-phase forward-backward filtering with odd reflection padding and
/// steady-state initial conditions.
std::vector<double> sos_filtfilt(const Sos& sos, std::span<const double> x);

/// Applies the filter channel-by-channel to a channels x samples signal.
std::vector<double> bandpass(std::span<const double> signal, std::size_t channels, const FilterSpec& spec);
std::vector<double> notch(std::span<const double> signal, std::size_t channels, const FilterSpec& spec);

/// Common average reference: subtracts the across-channel mean at each sample.
std::vector<double> average_reference(std::span<const double> signal, std::size_t channels);

struct PreprocessOptions {
  bool average_reference = true;
  double low_hz = 1.0;
  double high_hz = 49.0;
  int order = 4;
  double notch_hz = 60.0;  // <= 0 disables the notch
  double notch_quality = 30.0;
};

/// Average reference, bandpass, notch, in that order, over a whole recording.
Recording preprocess_recording(const Recording& rec, const PreprocessOptions& options);

/// Same chain applied to each segment independently (use only when the
/// continuous recording is unavailable; window edges see filter transients).
SegmentSet preprocess_segments(const SegmentSet& set, const PreprocessOptions& options);

}  // namespace cleer
