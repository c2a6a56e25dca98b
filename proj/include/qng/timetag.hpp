#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace qng {

/// One detector click. Streams are sorted by time, ties broken by channel.
struct ClickRecord {
    std::uint8_t channel;  ///< 0, 1 or 2
    std::uint64_t t_ps;    ///< picoseconds since run start

    friend bool operator==(const ClickRecord&, const ClickRecord&) = default;
};

using ClickStream = std::vector<ClickRecord>;

enum class StreamFormat { binary, csv };

/**
 * Binary time-tag format "GQTT":
 *   header: magic bytes "GQTT01" (0x47 0x51 0x54 0x54 0x30 0x31),
 *           then one unsigned 8-bit channel count,
 *   records: unsigned 8-bit channel, unsigned 64-bit little-endian
 *            time in picoseconds, 9 bytes each.
 * Record times must be nondecreasing within a reorder tolerance of 2^20 ps.
 *
 * The CSV alternative starts with the header line "channel,t_ps" and holds
 * one "<channel>,<t_ps>" record per line under the same ordering rule.
 *
 * parse_stream returns a fully sorted stream (sortedness is established by
 * a bounded reorder buffer, then guaranteed, not assumed). Violations throw
 * FormatError, OrderError or ChannelError.
 */
ClickStream parse_stream(std::istream& in, StreamFormat format);

void write_gqtt(std::ostream& out, std::span<const ClickRecord> stream,
                std::uint8_t channel_count = 3);
void write_csv(std::ostream& out, std::span<const ClickRecord> stream);

/// Counting configuration. Defaults follow the pulsed single-photon setup:
/// 12.15 ns repetition period, 3.2 ns integration window per time
/// coordinate, normalization at a 500-pulse delay.
struct AnalysisConfig {
    std::int64_t period_ps = 12150;
    std::int64_t window_ps = 3200;
    std::int64_t norm_delay_pulses = 500;
    std::int64_t max_pulse_lag = 10;  ///< extent of the dense pair histogram
    double jacobi_bin_ns = 0.2;

    void validate() const;  // throws ConfigError
};

struct JacobiPoint {
    double j1;
    double j2;
};

/// j1 = (2 t1 - t2 - t3)/sqrt(6), j2 = (t2 - t3)/sqrt(2), times in ns.
JacobiPoint jacobi(double t1_ns, double t2_ns, double t3_ns);

/// Three-fold patterns with two clicks in one pulse and the third in an
/// adjacent pulse: indexed by the lone detector channel and whether the
/// lone click falls in the earlier or the later pulse.
inline constexpr int kPairLagPatterns = 6;
int pairlag_pattern_index(int lone_channel, bool lone_later);
const char* pairlag_pattern_name(int index);

/**
 * Coincidence tallies of one pass over a click stream.
 *
 * pair_hist is keyed by signed pulse lag: for the channel pair {a < b} a
 * pair contributes at lag = pulse_b - pulse_a. Each unordered click pair is
 * counted exactly once, so for uncorrelated light every lag bin (including
 * zero) has the same expectation and g2 = pair_hist[0]/pair_hist[D] is
 * consistent without combinatorial factors.
 *
 * triple_separate_raw pools all six detector-to-pulse orderings of the
 * (0, D, 2D) three-pulse pattern; triple_separate = raw/6 is the
 * per-ordering normalization entering g3 = triple_same / triple_separate.
 */
struct CoincidenceSet {
    std::map<std::int64_t, std::uint64_t> pair_hist;
    std::uint64_t triple_same = 0;
    std::array<std::uint64_t, kPairLagPatterns> triple_pairlag{};
    std::uint64_t triple_separate_raw = 0;
    double triple_separate = 0.0;
    std::array<std::uint64_t, 3> singles{};
    std::uint64_t min_pulse = 0;
    std::uint64_t max_pulse = 0;
    bool any_clicks = false;

    std::uint64_t n_shots() const {
        return any_clicks ? max_pulse - min_pulse + 1 : 0;
    }

    void merge(const CoincidenceSet& other);
};

/// Single-pass streaming count with bounded memory (per-channel rings
/// spanning twice the normalization delay).
CoincidenceSet count_coincidences(std::span<const ClickRecord> stream,
                                  const AnalysisConfig& cfg);

/// Restricts credit to tuples whose newest click lands in
/// [credit_lo, credit_hi] (pulse indices); clicks before credit_lo still
/// serve as lookback context. This is the chunking contract: splitting a
/// stream at arbitrary pulse boundaries with sufficient overlap and merging
/// reproduces the single-pass result exactly.
CoincidenceSet count_coincidences(std::span<const ClickRecord> stream,
                                  const AnalysisConfig& cfg, std::uint64_t credit_lo,
                                  std::uint64_t credit_hi);

/// Data-parallel counting over n_chunks stream segments; bit-identical to
/// the single-pass result.
CoincidenceSet count_coincidences_parallel(std::span<const ClickRecord> stream,
                                           const AnalysisConfig& cfg, int n_chunks);

struct RateEstimate {
    double value = 0.0;
    double sigma = 0.0;   ///< one-sided 68.27% upper limit when is_upper_limit
    bool is_upper_limit = false;
};

/// Zero-count one-sided 68.27% Poisson upper limit, -ln(1 - 0.6827) counts.
inline constexpr double kZeroCountUpperLambda = 1.1479075803929872;

/// g2 = pair_hist[0] / pair_hist[norm_delay]; Poisson errors on both counts.
/// Throws NoNormalization when the delayed peak is absent or empty.
RateEstimate estimate_g2(const CoincidenceSet& c, const AnalysisConfig& cfg);

/// g3 = triple_same / triple_separate; when no same-pulse triple was seen
/// the value is 0 and sigma carries the one-sided upper limit.
RateEstimate estimate_g3(const CoincidenceSet& c, const AnalysisConfig& cfg);

enum class TripleSelection { same_pulse, pair_lag, separate };

/// Intra-pulse offsets (ns) of the clicks of each qualifying triple,
/// indexed by detector channel. Diagnostic surface behind jacobi_histogram;
/// also what symmetry checks rotate.
std::vector<std::array<double, 3>> collect_triple_offsets(
    std::span<const ClickRecord> stream, const AnalysisConfig& cfg,
    TripleSelection selection);

struct Histogram2D {
    double bin_ns = 0.0;
    double extent_ns = 0.0;  ///< axes cover [-extent, extent)
    int n_bins = 0;          ///< per axis
    std::vector<std::uint64_t> counts;  ///< row-major, j1 fastest

    std::uint64_t at(int i1, int i2) const {
        return counts[static_cast<std::size_t>(i2) * n_bins + i1];
    }
    std::uint64_t total() const;
};

/// 2D histogram over the Jacobi plane of the selected triple class.
Histogram2D jacobi_histogram(std::span<const ClickRecord> stream,
                             const AnalysisConfig& cfg, TripleSelection selection);

void write_histogram_csv(std::ostream& out, const Histogram2D& h);
void write_pair_hist_csv(std::ostream& out, const CoincidenceSet& c);

}  // namespace qng
