#include "qng/timetag.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <future>
#include <istream>
#include <ostream>
#include <queue>
#include <string>

#include "qng/errors.hpp"

namespace qng {

namespace {

constexpr std::uint64_t kReorderTolerancePs = 1ULL << 20;
constexpr char kMagic[6] = {0x47, 0x51, 0x54, 0x54, 0x30, 0x31};  // "GQTT01"

struct ClickOrder {
    bool operator()(const ClickRecord& a, const ClickRecord& b) const {
        return a.t_ps != b.t_ps ? a.t_ps > b.t_ps : a.channel > b.channel;
    }
};

// Bounded reorder buffer: emits records once no future record can precede
// them, throws OrderError past the tolerance.
class ReorderBuffer {
public:
    explicit ReorderBuffer(ClickStream& out) : out_(out) {}

    void push(ClickRecord rec) {
        if (max_seen_ > kReorderTolerancePs &&
            rec.t_ps < max_seen_ - kReorderTolerancePs)
            throw OrderError("time tag " + std::to_string(rec.t_ps) +
                             " ps is older than the reorder tolerance allows");
        max_seen_ = std::max(max_seen_, rec.t_ps);
        heap_.push(rec);
        const std::uint64_t safe =
            max_seen_ > kReorderTolerancePs ? max_seen_ - kReorderTolerancePs : 0;
        while (!heap_.empty() && heap_.top().t_ps < safe) {
            out_.push_back(heap_.top());
            heap_.pop();
        }
    }

    void finish() {
        while (!heap_.empty()) {
            out_.push_back(heap_.top());
            heap_.pop();
        }
    }

private:
    ClickStream& out_;
    std::priority_queue<ClickRecord, std::vector<ClickRecord>, ClickOrder> heap_;
    std::uint64_t max_seen_ = 0;
};

void check_channel(unsigned channel, unsigned channel_count) {
    if (channel >= channel_count || channel > 2)
        throw ChannelError("channel " + std::to_string(channel) +
                           " outside the declared channel set");
}

ClickStream parse_binary(std::istream& in) {
    char magic[6];
    in.read(magic, 6);
    if (in.gcount() != 6 || std::memcmp(magic, kMagic, 6) != 0)
        throw FormatError("missing GQTT01 magic");
    char cc = 0;
    in.read(&cc, 1);
    if (in.gcount() != 1) throw FormatError("missing channel count");
    const unsigned channel_count = static_cast<unsigned char>(cc);
    if (channel_count == 0 || channel_count > 3)
        throw FormatError("channel count must be 1..3, got " +
                          std::to_string(channel_count));

    ClickStream out;
    ReorderBuffer buf(out);
    char rec[9];
    while (true) {
        in.read(rec, 9);
        const auto got = in.gcount();
        if (got == 0) break;
        if (got != 9) throw FormatError("truncated record at end of stream");
        const unsigned channel = static_cast<unsigned char>(rec[0]);
        check_channel(channel, channel_count);
        std::uint64_t t = 0;
        for (int i = 7; i >= 0; --i)
            t = (t << 8) | static_cast<unsigned char>(rec[1 + i]);
        buf.push({static_cast<std::uint8_t>(channel), t});
    }
    buf.finish();
    return out;
}

ClickStream parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty input, expected CSV header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "channel,t_ps")
        throw FormatError("bad CSV header, expected \"channel,t_ps\"");

    ClickStream out;
    ReorderBuffer buf(out);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw FormatError("line " + std::to_string(lineno) + ": missing comma");
        unsigned long long channel = 0, t = 0;
        try {
            std::size_t used = 0;
            channel = std::stoull(line.substr(0, comma), &used);
            if (used != comma) throw std::invalid_argument("");
            const std::string rest = line.substr(comma + 1);
            t = std::stoull(rest, &used);
            if (used != rest.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw FormatError("line " + std::to_string(lineno) + ": malformed record");
        }
        check_channel(static_cast<unsigned>(channel), 3);
        buf.push({static_cast<std::uint8_t>(channel), t});
    }
    buf.finish();
    return out;
}

}  // namespace

ClickStream parse_stream(std::istream& in, StreamFormat format) {
    return format == StreamFormat::binary ? parse_binary(in) : parse_csv(in);
}

void write_gqtt(std::ostream& out, std::span<const ClickRecord> stream,
                std::uint8_t channel_count) {
    out.write(kMagic, 6);
    out.put(static_cast<char>(channel_count));
    char rec[9];
    for (const auto& c : stream) {
        rec[0] = static_cast<char>(c.channel);
        std::uint64_t t = c.t_ps;
        for (int i = 0; i < 8; ++i) {
            rec[1 + i] = static_cast<char>(t & 0xff);
            t >>= 8;
        }
        out.write(rec, 9);
    }
    if (!out) throw IoError("failed to write GQTT stream");
}

void write_csv(std::ostream& out, std::span<const ClickRecord> stream) {
    out << "channel,t_ps\n";
    for (const auto& c : stream)
        out << static_cast<unsigned>(c.channel) << ',' << c.t_ps << '\n';
    if (!out) throw IoError("failed to write CSV stream");
}

void AnalysisConfig::validate() const {
    if (period_ps <= 0) throw ConfigError("period_ps must be positive");
    if (window_ps <= 0 || window_ps >= period_ps)
        throw ConfigError("window_ps must lie in (0, period_ps)");
    if (norm_delay_pulses < 2) throw ConfigError("norm_delay_pulses must be >= 2");
    if (max_pulse_lag < 1) throw ConfigError("max_pulse_lag must be >= 1");
    if (!(jacobi_bin_ns > 0.0)) throw ConfigError("jacobi_bin_ns must be positive");
}

JacobiPoint jacobi(double t1_ns, double t2_ns, double t3_ns) {
    constexpr double inv_sqrt6 = 0.40824829046386301637;
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    return {(2.0 * t1_ns - t2_ns - t3_ns) * inv_sqrt6, (t2_ns - t3_ns) * inv_sqrt2};
}

int pairlag_pattern_index(int lone_channel, bool lone_later) {
    return lone_channel * 2 + (lone_later ? 1 : 0);
}

const char* pairlag_pattern_name(int index) {
    static const char* names[kPairLagPatterns] = {
        "lone_ch0_early", "lone_ch0_late", "lone_ch1_early",
        "lone_ch1_late",  "lone_ch2_early", "lone_ch2_late"};
    return names[index];
}

void CoincidenceSet::merge(const CoincidenceSet& other) {
    for (const auto& [lag, n] : other.pair_hist) pair_hist[lag] += n;
    triple_same += other.triple_same;
    for (int i = 0; i < kPairLagPatterns; ++i) triple_pairlag[i] += other.triple_pairlag[i];
    triple_separate_raw += other.triple_separate_raw;
    triple_separate = static_cast<double>(triple_separate_raw) / 6.0;
    for (int i = 0; i < 3; ++i) singles[i] += other.singles[i];
    if (other.any_clicks) {
        if (!any_clicks) {
            min_pulse = other.min_pulse;
            max_pulse = other.max_pulse;
            any_clicks = true;
        } else {
            min_pulse = std::min(min_pulse, other.min_pulse);
            max_pulse = std::max(max_pulse, other.max_pulse);
        }
    }
}

namespace {

// Per-channel pulse-slot ring. Slots are keyed by pulse index modulo a
// power-of-two size and invalidated lazily by pulse mismatch.
class CountRing {
public:
    explicit CountRing(std::uint64_t lookback) {
        std::uint64_t size = std::bit_ceil(lookback + 2);
        mask_ = size - 1;
        pulse_.assign(size, ~0ULL);
        cnt_.assign(size, 0);
    }

    std::uint32_t get(std::uint64_t q) const {
        const std::uint64_t i = q & mask_;
        return pulse_[i] == q ? cnt_[i] : 0;
    }

    void add(std::uint64_t q) {
        const std::uint64_t i = q & mask_;
        if (pulse_[i] != q) {
            pulse_[i] = q;
            cnt_[i] = 0;
        }
        ++cnt_[i];
    }

private:
    std::uint64_t mask_;
    std::vector<std::uint64_t> pulse_;
    std::vector<std::uint32_t> cnt_;
};

struct PulseOffset {
    std::uint64_t pulse;
    std::int64_t offset_ps;
    bool in_window;
};

inline PulseOffset locate(std::uint64_t t_ps, const AnalysisConfig& cfg) {
    const std::uint64_t period = static_cast<std::uint64_t>(cfg.period_ps);
    const std::uint64_t p = (t_ps + period / 2) / period;
    const std::int64_t off = static_cast<std::int64_t>(t_ps - p * period);
    return {p, off, 2 * std::abs(off) <= cfg.window_ps};
}

// Monotone pulse assignment without a division per click: sorted input
// lets the pulse index advance incrementally, falling back to a division
// only across large gaps.
class PulseTracker {
public:
    explicit PulseTracker(const AnalysisConfig& cfg)
        : period_(static_cast<std::uint64_t>(cfg.period_ps)),
          half_(period_ / 2),
          up_(period_ - half_),
          window_(cfg.window_ps) {}

    PulseOffset locate(std::uint64_t t_ps) {
        if (!init_ || t_ps >= center_ + 64 * period_) {
            pulse_ = (t_ps + half_) / period_;
            center_ = pulse_ * period_;
            init_ = true;
        }
        while (t_ps >= center_ + up_) {
            ++pulse_;
            center_ += period_;
        }
        const std::int64_t off = static_cast<std::int64_t>(t_ps - center_);
        return {pulse_, off, 2 * std::abs(off) <= window_};
    }

private:
    std::uint64_t period_, half_, up_;
    std::int64_t window_;
    std::uint64_t pulse_ = 0, center_ = 0;
    bool init_ = false;
};

}  // namespace

CoincidenceSet count_coincidences(std::span<const ClickRecord> stream,
                                  const AnalysisConfig& cfg, std::uint64_t credit_lo,
                                  std::uint64_t credit_hi) {
    cfg.validate();

    const std::uint64_t d = static_cast<std::uint64_t>(cfg.norm_delay_pulses);
    const std::uint64_t max_lag = static_cast<std::uint64_t>(cfg.max_pulse_lag);
    const std::uint64_t lookback = std::max(2 * d, max_lag);

    // Lags probed per click: the dense display range plus the delayed
    // normalization peaks.
    std::vector<std::uint64_t> lags;
    for (std::uint64_t l = 0; l <= max_lag; ++l) lags.push_back(l);
    for (std::uint64_t l : {d, 2 * d})
        if (l > max_lag) lags.push_back(l);

    std::vector<std::uint64_t> pos(lags.size(), 0), neg(lags.size(), 0);
    CountRing rings[3] = {CountRing(lookback), CountRing(lookback), CountRing(lookback)};

    CoincidenceSet cs;
    PulseTracker tracker(cfg);
    for (const auto& click : stream) {
        const auto [p, off, in_window] = tracker.locate(click.t_ps);
        if (!cs.any_clicks) {
            cs.min_pulse = cs.max_pulse = p;
            cs.any_clicks = true;
        } else {
            cs.min_pulse = std::min(cs.min_pulse, p);
            cs.max_pulse = std::max(cs.max_pulse, p);
        }
        if (!in_window) continue;

        const int c = click.channel;
        const int o1 = c == 0 ? 1 : 0;
        const int o2 = c == 2 ? 1 : 2;
        const bool credit = p >= credit_lo && p <= credit_hi;

        if (credit) {
            ++cs.singles[c];

            for (std::size_t li = 0; li < lags.size(); ++li) {
                const std::uint64_t l = lags[li];
                if (p < l) break;  // lags are sorted ascending
                const std::uint64_t q = p - l;
                for (int other : {o1, o2}) {
                    const std::uint32_t n = rings[other].get(q);
                    if (n) (other < c ? pos : neg)[li] += n;
                }
            }

            // three channels in one pulse, completed by this click
            const std::uint32_t n1p = rings[o1].get(p);
            const std::uint32_t n2p = rings[o2].get(p);
            if (n1p && n2p)
                cs.triple_same += static_cast<std::uint64_t>(n1p) * n2p;

            if (p >= 1) {
                // pair in this pulse, lone click one pulse earlier
                for (int other : {o1, o2}) {
                    const int lone = other == o1 ? o2 : o1;
                    const std::uint64_t nn = static_cast<std::uint64_t>(
                                                 rings[other].get(p)) *
                                             rings[lone].get(p - 1);
                    cs.triple_pairlag[pairlag_pattern_index(lone, false)] += nn;
                }
                // pair one pulse earlier, this click is the lone one
                cs.triple_pairlag[pairlag_pattern_index(c, true)] +=
                    static_cast<std::uint64_t>(rings[o1].get(p - 1)) *
                    rings[o2].get(p - 1);
            }

            // three separate pulses at the normalization lags (0, d, 2d)
            if (p >= 2 * d) {
                cs.triple_separate_raw +=
                    static_cast<std::uint64_t>(rings[o1].get(p - 2 * d)) *
                        rings[o2].get(p - d) +
                    static_cast<std::uint64_t>(rings[o2].get(p - 2 * d)) *
                        rings[o1].get(p - d);
            }
        }

        rings[c].add(p);
    }

    // Materialize the histogram with explicit zeros on every probed lag.
    for (std::size_t li = 0; li < lags.size(); ++li) {
        const std::int64_t l = static_cast<std::int64_t>(lags[li]);
        cs.pair_hist[l] += pos[li];
        cs.pair_hist[-l] += neg[li];
    }
    cs.triple_separate = static_cast<double>(cs.triple_separate_raw) / 6.0;
    return cs;
}

CoincidenceSet count_coincidences(std::span<const ClickRecord> stream,
                                  const AnalysisConfig& cfg) {
    return count_coincidences(stream, cfg, 0, ~0ULL);
}

CoincidenceSet count_coincidences_parallel(std::span<const ClickRecord> stream,
                                           const AnalysisConfig& cfg, int n_chunks) {
    cfg.validate();
    if (n_chunks <= 1 || stream.size() < 2) return count_coincidences(stream, cfg);

    const std::uint64_t pmin = locate(stream.front().t_ps, cfg).pulse;
    const std::uint64_t pmax = locate(stream.back().t_ps, cfg).pulse;
    const std::uint64_t span = pmax - pmin + 1;
    const std::uint64_t chunk = std::max<std::uint64_t>(1, span / n_chunks);
    const std::uint64_t lookback =
        std::max<std::uint64_t>(2 * cfg.norm_delay_pulses, cfg.max_pulse_lag);

    const std::uint64_t period = static_cast<std::uint64_t>(cfg.period_ps);
    auto first_click_at_pulse = [&](std::uint64_t q) {
        // first stream index whose pulse is >= q
        const std::uint64_t t_thr = q * period > period / 2 ? q * period - period / 2 : 0;
        return std::lower_bound(stream.begin(), stream.end(), t_thr,
                                [](const ClickRecord& r, std::uint64_t t) {
                                    return r.t_ps < t;
                                }) -
               stream.begin();
    };

    std::vector<std::future<CoincidenceSet>> futures;
    for (std::uint64_t lo = pmin; lo <= pmax; lo += chunk) {
        const std::uint64_t hi = std::min(pmax, lo + chunk - 1);
        const std::uint64_t ctx_lo = lo > pmin + lookback ? lo - lookback : pmin;
        const auto begin = first_click_at_pulse(ctx_lo);
        const auto end = first_click_at_pulse(hi + 1);
        futures.push_back(std::async(std::launch::async, [=, &cfg, &stream] {
            return count_coincidences(stream.subspan(begin, end - begin), cfg, lo, hi);
        }));
        if (hi == pmax) break;
    }

    CoincidenceSet total;
    for (auto& f : futures) total.merge(f.get());
    return total;
}

RateEstimate estimate_g2(const CoincidenceSet& c, const AnalysisConfig& cfg) {
    const auto it = c.pair_hist.find(cfg.norm_delay_pulses);
    if (it == c.pair_hist.end() || it->second == 0)
        throw NoNormalization("estimate_g2: no counts in the delayed normalization peak");
    const double denom = static_cast<double>(it->second);

    const auto it0 = c.pair_hist.find(0);
    const double num = it0 == c.pair_hist.end() ? 0.0 : static_cast<double>(it0->second);
    if (num == 0.0) return {0.0, kZeroCountUpperLambda / denom, true};

    const double g2 = num / denom;
    return {g2, g2 * std::sqrt(1.0 / num + 1.0 / denom), false};
}

RateEstimate estimate_g3(const CoincidenceSet& c, const AnalysisConfig&) {
    if (!(c.triple_separate > 0.0))
        throw NoNormalization("estimate_g3: no three-separate-pulse normalization triples");
    const double denom = c.triple_separate;
    if (c.triple_same == 0) return {0.0, kZeroCountUpperLambda / denom, true};

    const double num = static_cast<double>(c.triple_same);
    const double g3 = num / denom;
    return {g3, g3 * std::sqrt(1.0 / num + 1.0 / denom), false};
}

namespace {

// Offset-keeping ring used by the Jacobi pass; slots hold every in-window
// click of one pulse per channel.
class OffsetRing {
public:
    explicit OffsetRing(std::uint64_t lookback) {
        std::uint64_t size = std::bit_ceil(lookback + 2);
        mask_ = size - 1;
        pulse_.assign(size, ~0ULL);
        offs_.resize(size);
    }

    const std::vector<std::int64_t>* get(std::uint64_t q) const {
        const std::uint64_t i = q & mask_;
        return pulse_[i] == q && !offs_[i].empty() ? &offs_[i] : nullptr;
    }

    void add(std::uint64_t q, std::int64_t off) {
        const std::uint64_t i = q & mask_;
        if (pulse_[i] != q) {
            pulse_[i] = q;
            offs_[i].clear();
        }
        offs_[i].push_back(off);
    }

private:
    std::uint64_t mask_;
    std::vector<std::uint64_t> pulse_;
    std::vector<std::vector<std::int64_t>> offs_;
};

}  // namespace

std::vector<std::array<double, 3>> collect_triple_offsets(
    std::span<const ClickRecord> stream, const AnalysisConfig& cfg,
    TripleSelection selection) {
    cfg.validate();
    const std::uint64_t d = static_cast<std::uint64_t>(cfg.norm_delay_pulses);
    const std::uint64_t lookback = std::max<std::uint64_t>(2 * d, 1);
    OffsetRing rings[3] = {OffsetRing(lookback), OffsetRing(lookback),
                           OffsetRing(lookback)};

    std::vector<std::array<double, 3>> out;
    PulseTracker tracker(cfg);
    auto emit = [&](int c, double oc, int ca, const std::vector<std::int64_t>& a,
                    int cb, const std::vector<std::int64_t>& b) {
        for (const auto oa : a)
            for (const auto ob : b) {
                std::array<double, 3> t{};
                t[c] = oc * 1e-3;
                t[ca] = static_cast<double>(oa) * 1e-3;
                t[cb] = static_cast<double>(ob) * 1e-3;
                out.push_back(t);
            }
    };

    for (const auto& click : stream) {
        const auto [p, off, in_window] = tracker.locate(click.t_ps);
        if (!in_window) continue;
        const int c = click.channel;
        const int o1 = c == 0 ? 1 : 0;
        const int o2 = c == 2 ? 1 : 2;
        const double oc = static_cast<double>(off);

        switch (selection) {
            case TripleSelection::same_pulse: {
                const auto* a = rings[o1].get(p);
                const auto* b = rings[o2].get(p);
                if (a && b) emit(c, oc, o1, *a, o2, *b);
                break;
            }
            case TripleSelection::pair_lag: {
                if (p >= 1) {
                    for (int other : {o1, o2}) {
                        const int lone = other == o1 ? o2 : o1;
                        const auto* a = rings[other].get(p);
                        const auto* b = rings[lone].get(p - 1);
                        if (a && b) emit(c, oc, other, *a, lone, *b);
                    }
                    const auto* a = rings[o1].get(p - 1);
                    const auto* b = rings[o2].get(p - 1);
                    if (a && b) emit(c, oc, o1, *a, o2, *b);
                }
                break;
            }
            case TripleSelection::separate: {
                if (p >= 2 * d) {
                    for (int first : {o1, o2}) {
                        const int mid = first == o1 ? o2 : o1;
                        const auto* a = rings[first].get(p - 2 * d);
                        const auto* b = rings[mid].get(p - d);
                        if (a && b) emit(c, oc, first, *a, mid, *b);
                    }
                }
                break;
            }
        }

        rings[c].add(p, off);
    }
    return out;
}

std::uint64_t Histogram2D::total() const {
    std::uint64_t s = 0;
    for (const auto c : counts) s += c;
    return s;
}

Histogram2D jacobi_histogram(std::span<const ClickRecord> stream,
                             const AnalysisConfig& cfg, TripleSelection selection) {
    const auto triples = collect_triple_offsets(stream, cfg, selection);

    Histogram2D h;
    h.bin_ns = cfg.jacobi_bin_ns;
    h.extent_ns = static_cast<double>(cfg.window_ps) * 1e-3;
    h.n_bins = 2 * static_cast<int>(std::ceil(h.extent_ns / h.bin_ns));
    h.extent_ns = 0.5 * h.n_bins * h.bin_ns;
    h.counts.assign(static_cast<std::size_t>(h.n_bins) * h.n_bins, 0);

    for (const auto& t : triples) {
        const JacobiPoint j = jacobi(t[0], t[1], t[2]);
        const int i1 = static_cast<int>(std::floor((j.j1 + h.extent_ns) / h.bin_ns));
        const int i2 = static_cast<int>(std::floor((j.j2 + h.extent_ns) / h.bin_ns));
        if (i1 < 0 || i1 >= h.n_bins || i2 < 0 || i2 >= h.n_bins) continue;
        ++h.counts[static_cast<std::size_t>(i2) * h.n_bins + i1];
    }
    return h;
}

void write_histogram_csv(std::ostream& out, const Histogram2D& h) {
    out << "j1_ns,j2_ns,count\n";
    for (int i2 = 0; i2 < h.n_bins; ++i2)
        for (int i1 = 0; i1 < h.n_bins; ++i1) {
            const double j1 = -h.extent_ns + (i1 + 0.5) * h.bin_ns;
            const double j2 = -h.extent_ns + (i2 + 0.5) * h.bin_ns;
            out << j1 << ',' << j2 << ',' << h.at(i1, i2) << '\n';
        }
    if (!out) throw IoError("failed to write histogram CSV");
}

void write_pair_hist_csv(std::ostream& out, const CoincidenceSet& c) {
    out << "pulse_lag,counts\n";
    for (const auto& [lag, n] : c.pair_hist) out << lag << ',' << n << '\n';
    if (!out) throw IoError("failed to write pair histogram CSV");
}

}  // namespace qng
