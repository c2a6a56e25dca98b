#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "qng/gaussian_model.hpp"
#include "qng/timetag.hpp"

namespace qng {

/**
 * Pulsed single-photon source model. Each pulse draws an explicit photon
 * multiset: 0..3 source photons (categorical, probabilities from emit_prob
 * and the multi-photon probabilities) with exponential emission-time
 * offsets, plus a Poissonian number of laser-leakage photons with narrow
 * Gaussian offsets. Photons route independently to the three detectors,
 * pick up Gaussian detection jitter, and at most one click per detector
 * per pulse survives (non-number-resolving detectors fire once, on the
 * earliest photon).
 *
 * The intrinsic correlation functions of this model are analytic, which is
 * what makes it usable as an estimator oracle.
 */
struct SourceConfig {
    std::uint64_t n_pulses = 0;
    std::int64_t period_ps = 12150;
    double emit_prob = 0.0;          ///< P(exactly one source photon)
    double two_photon_prob = 0.0;    ///< P(two source photons)
    double three_photon_prob = 0.0;  ///< P(three source photons)
    double lifetime_ps = 500.0;      ///< exponential decay constant
    double leak_prob = 0.0;          ///< mean laser-leakage photons per pulse
    double leak_width_ps = 50.0;
    double jitter_ps = 0.0;          ///< Gaussian detector jitter sigma
    std::array<double, 3> split = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError

    /// Routing of a 50:50 splitter followed by a 50:50 splitter on one arm.
    static std::array<double, 3> cascade_split() { return {0.5, 0.25, 0.25}; }

    /// Falling-factorial moments of the per-pulse photon number
    /// (source photons plus leakage).
    MomentTriple intrinsic_moments() const;

    /// Intrinsic g2 and g3 of the emitted field.
    CorrelationPoint intrinsic_correlations() const;
};

/// Deterministic for a fixed seed: every pulse owns an indexed substream,
/// so the stream is reproducible bit for bit regardless of chunking.
ClickStream simulate(const SourceConfig& cfg);

/// Streaming variant: clicks are delivered to the sink in global time
/// order without holding the whole run in memory.
void simulate_stream(const SourceConfig& cfg,
                     const std::function<void(const ClickRecord&)>& sink);

/// simulate() with leakage photons required; models the misaligned-
/// excitation check run. Throws ConfigError when leak_prob is zero.
ClickStream leakage_scenario(const SourceConfig& cfg);

/// Independent Bernoulli thinning of every click with survival probability
/// eta; deterministic for fixed seed.
ClickStream thin_stream(const ClickStream& stream, double eta, std::uint64_t seed);

}  // namespace qng
