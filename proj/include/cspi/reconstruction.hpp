#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cspi/forward.hpp"
#include "cspi/fringes.hpp"

namespace cspi {

/// Reconstruction is attempted only where |phi| reaches this fraction of its peak.
inline constexpr double bandwidth_mask_fraction = 1e-2;

/// dArg(psi)/d(omega) = 2 pi / spacing - t_r.
double phase_gradient_single(double spacing, double t_r);
/// dArg(psi_minus)/d(omega1 - omega2) = 2 pi / spacing - (t_r1 - t_r2) / 2.
double phase_gradient_diff(double spacing, double t_r1, double t_r2);

/// Grid values with a validity flag per point.
struct MaskedProfile {
  FrequencyGrid grid{0.0, 1.0, 2};
  std::vector<double> values;  // 0 where invalid
  std::vector<char> valid;

  std::size_t valid_count() const noexcept;
  /// Closed intervals of consecutive valid points.
  std::vector<std::pair<double, double>> ranges() const;
};

/// |psi| = (C_max - C_min) / (2 |alpha gamma phi|). Points outside the envelope domain or below
/// the bandwidth mask are invalid; nothing is extrapolated.
MaskedProfile amplitude_from_envelope(const EnvelopePair &envelope, complex alpha, complex gamma,
                                      const SpectralAmplitude &phi);

/// Phase-gradient samples along nu, assigned to the midpoints between the fringe maxima they came from.
struct PhaseProfile {
  std::vector<double> nu;
  std::vector<double> gradient;

  /// Cumulative trapezoid integral of the gradient, shifted so it is 0 at nu = 0 (or at the
  /// sample nearest to it when 0 lies outside the samples).
  std::vector<double> integrated() const;
};

struct CurvatureFit {
  double curvature = 0.0;  // slope of gradient against nu
  double intercept = 0.0;
  double residual = 0.0;   // RMS deviation from the line
};

/// Least-squares line through the gradient samples. Needs at least 3 samples spanning min_span.
CurvatureFit fit_curvature(const PhaseProfile &profile, double min_span);

struct CorrelationTime {
  double strong_chirp = 0.0;  // 2 delta_diff |curvature|, the strong-chirp approximation
  double quadrature = 0.0;    // sqrt(1 / delta_diff^2 + (2 delta_diff curvature)^2), exact for Gaussians
};

CorrelationTime correlation_time(double delta_diff, double curvature);

struct EntanglementVerdict {
  double delta_sum = 0.0;
  double delta_diff = 0.0;
  double curvature = 0.0;  // magnitude
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;     // rhs / lhs, infinite when the curvature vanishes
  bool entangled = false;
  double uncertainty_product = 0.0;  // delta_sum * quadrature correlation time
  double violation_factor = 0.0;     // 1 / uncertainty_product
};

EntanglementVerdict separability_check(double delta_sum, double delta_diff, double curvature);

struct ScanSample {
  double t_r = 0.0;
  CountDistribution counts;
};

struct PairScanSample {
  double t_r1 = 0.0;
  double t_r2 = 0.0;
  CountDistribution counts;
};

/// Complex wavefunction recovered by fitting A + B cos(phase + theta) in every bin, with
/// the phase anchored to 0 at the valid bin nearest the grid centre.
struct TomographyResult {
  SpectralAmplitude amplitude;
  std::vector<char> valid;
};

struct PairTomographyResult {
  TwoPhotonAmplitude amplitude;
  std::vector<char> valid;
};

/// Bins below the bandwidth mask, or whose scanned phase omega * t_r covers less than 2 pi,
/// are masked. Fails with insufficient_samples below 4 distinct scan points, with
/// insufficient_scan_range when no bin qualifies, and with zero_signal when no fringes exist.
TomographyResult timescan_tomography(const std::vector<ScanSample> &series, const SpectralAmplitude &reference,
                                     complex alpha, complex gamma);
PairTomographyResult timescan_tomography(const std::vector<PairScanSample> &series,
                                         const SpectralAmplitude &reference, complex alpha, complex eta);

struct SingleReport {
  double fringe_spacing = 0.0;  // median spacing of adjacent crests on the mask
  double phase_gradient = 0.0;  // at that spacing
  double signal_time = 0.0;     // t_r - 2 pi / spacing
  PhaseProfile phase;
  MaskedProfile amplitude;
};

/// Envelope inversion and fringe-spacing analysis of a single-photon rate table.
SingleReport analyze_single(const CountDistribution &rates, const SpectralAmplitude &reference,
                            const InterferenceSetup1D &setup);

struct PairOptions {
  double strength_fraction = 0.1;  // gradient samples need crests this strong relative to the best
  double fold_fraction = 0.5;      // and a fringe frequency at least this fraction of |t_r1 - t_r2| / 2
  std::optional<MomentReport> fallback_moments;  // used when the envelope moments are unavailable
};

struct ReconstructionReport {
  double delta_sum = 0.0;
  double delta_diff = 0.0;
  double curvature = 0.0;
  double curvature_residual = 0.0;
  double t_corr_strong_chirp = 0.0;
  double t_corr_quadrature = 0.0;
  double uncertainty_product = 0.0;
  double violation_factor = 0.0;
  bool entangled = false;
  double margin = 0.0;
  double fringe_spacing = 0.0;  // crest spacing next to the centre of the analysed slice
  double slice_sum = 0.0;       // omega1 + omega2 of the analysed slice
  std::vector<std::pair<double, double>> mask;  // nu ranges carrying gradient samples
  std::string source;           // "envelope" or "state"
  PhaseProfile phase;
  std::vector<double> slice_nu;    // analysed slice, for plotting
  std::vector<double> slice_values;
  std::vector<double> slice_reference;  // |alpha1 alpha2 phi phi| along the slice
  MaskedProfile amplitude_diff;    // |psi| along the analysed slice from the crest envelope
};

/// Full two-photon analysis of a coincidence table: crest spacings along omega1 - omega2,
/// curvature, envelope moments, correlation times and the separability verdict. Sampled
/// counts are rescaled to rates and averaged over the central band of sum frequencies.
ReconstructionReport analyze_pair(const CountDistribution &table, const SpectralAmplitude &reference,
                                  const InterferenceSetup2D &setup, const PairOptions &options = {});

/// Fringe spacing along omega1 + omega2, from the drift of the crest positions in nu across
/// neighbouring sum-frequency slices.
double sum_direction_spacing(const CountDistribution &table, const SpectralAmplitude &reference,
                             const InterferenceSetup2D &setup);

} // namespace cspi
