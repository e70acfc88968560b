#include "holdtime/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>

namespace holdtime {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

PathStream::PathStream(std::uint64_t seed, std::uint64_t index)
    : state_(mix64(mix64(seed) ^ (index * 0xD1B54A32D192ED03ULL + 1))) {}

std::uint64_t PathStream::next() noexcept {
    state_ += kGolden;
    return mix64(state_);
}

double PathStream::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double PathStream::exponential(double rate) noexcept {
    if (!(rate > 0.0)) return kInf;
    return -std::log1p(-uniform()) / rate;
}

std::size_t PathStream::below(std::size_t n) noexcept {
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return std::min(k, n - 1);
}

unsigned default_threads() {
    if (const char* env = std::getenv("HOLDTIME_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Chunks are fixed-size and merged in index order, so the result does not
// depend on how many workers picked them up.
constexpr std::size_t kChunk = 512;

template <class Acc, class PathFn>
Acc reduce_paths(std::size_t n, unsigned threads, const Acc& zero, PathFn&& fn) {
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<Acc> parts(chunks, zero);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        try {
            for (std::size_t c; (c = next.fetch_add(1)) < chunks;) {
                const std::size_t end = std::min(n, (c + 1) * kChunk);
                for (std::size_t i = c * kChunk; i < end; ++i) fn(parts[c], i);
            }
        } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
            next.store(chunks);
        }
    };
    if (threads == 0) threads = default_threads();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(chunks, 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    Acc total = zero;
    for (auto& p : parts) total.merge(p);
    return total;
}

// Cumulative jump table: targets[off[i] .. off[i+1]) with cumulative weights.
struct JumpTable {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> targets;
    std::vector<double> cumulative;

    void add_row(const std::vector<std::pair<std::size_t, double>>& row) {
        if (offsets.empty()) offsets.push_back(0);
        double total = 0.0;
        for (const auto& [j, w] : row) total += w;
        double acc = 0.0;
        for (const auto& [j, w] : row) {
            if (!(w > 0.0)) continue;
            acc += w / total;
            targets.push_back(j);
            cumulative.push_back(acc);
        }
        offsets.push_back(targets.size());
    }

    std::size_t pick(std::size_t i, double u) const {
        auto first = cumulative.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
        auto last = cumulative.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
        auto it = std::upper_bound(first, last, u);
        if (it == last) --it;
        return targets[static_cast<std::size_t>(it - cumulative.begin())];
    }
};

struct Cursor {
    double time = 0.0;
    std::size_t state = 0;
    double entered = 0.0;  // time of the last (re)entry to the origin

    double clock() const { return time - entered; }
};

Cursor cursor_at(const AugmentedState& s) {
    Cursor c;
    if (const auto* in = std::get_if<Interior>(&s)) {
        c.state = in->state;
    } else {
        c.entered = -std::get<AtOrigin>(s).clock;
    }
    return c;
}

struct Step {
    double time;
    std::size_t to;
    bool dies;
};

// The original chain. With `killed` set it dies at tau; otherwise it runs on and
// the threshold crossing is reported separately.
class RawDynamics {
public:
    RawDynamics(const ChainSpec& spec, bool killed) : killed_(killed) {
        q0_ = spec.q0();
        theta_ = spec.wait_threshold();
        exit_.resize(spec.n_states());
        for (std::size_t i = 0; i < spec.n_states(); ++i) {
            std::vector<std::pair<std::size_t, double>> row;
            for (std::size_t j = 0; j < spec.n_states(); ++j)
                if (j != i || i == 0) row.emplace_back(j, spec.rate(i, j));
            table_.add_row(row);
            exit_[i] = i == 0 ? q0_ : spec.exit_rate(i);
        }
    }

    Step next(const Cursor& c, PathStream& rng) const {
        const double hold = rng.exponential(exit_[c.state]);
        if (c.state == 0 && killed_ && c.clock() + hold >= theta_) return {c.entered + theta_, 0, true};
        return {c.time + hold, table_.pick(c.state, rng.uniform()), false};
    }

    double theta() const { return theta_; }

private:
    bool killed_;
    double q0_ = 0.0;
    double theta_ = 1.0;
    Vector exit_;
    JumpTable table_;
};

class ConditionedDynamics {
public:
    explicit ConditionedDynamics(const ConditionedChain& c) : chain_(c) {
        const std::size_t n = c.n_states;
        row_.assign(n, 0.0);
        total_.assign(n, 0.0);
        std::vector<std::pair<std::size_t, double>> exits;
        for (std::size_t j = 0; j < n; ++j) exits.emplace_back(j, c.exit_probs[j]);
        table_.add_row(exits);
        for (std::size_t i = 1; i < n; ++i) {
            std::vector<std::pair<std::size_t, double>> row;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                row.emplace_back(j, c.rates(i, j));
                row_[i] += c.rates(i, j);
            }
            table_.add_row(row);
            total_[i] = std::max(row_[i], c.holding_rate[i]);
        }
    }

    Step next(const Cursor& c, PathStream& rng) const {
        if (c.state != 0) {
            const double lambda = total_[c.state];
            const double t = c.time + rng.exponential(lambda);
            if (rng.uniform() * lambda >= row_[c.state]) return {t, 0, true};
            return {t, table_.pick(c.state, rng.uniform()), false};
        }
        const OriginLaw& law = chain_.origin;
        const double u = c.clock();
        const double d = law.full_hold_death;
        const double w = 1.0 - d;
        const double below = 1.0 - law.cdf(u);
        const double denom = w * below + d;
        const double leave = denom > 0.0 ? w * below / denom : 0.0;
        if (rng.uniform() >= leave) return {c.entered + law.theta, 0, true};
        double l = law.inverse_cdf(law.cdf(u) + rng.uniform() * below);
        l = std::max(l, u);
        const double t = c.entered + l;
        if (chain_.hazard) {
            const double rest = w * (1.0 - law.cdf(l)) + d;
            const double total = rest > 0.0 ? w * law.density(l) / rest : kInf;
            // At the threshold itself the ratio tends to e^{-q0 theta}.
            const double kill = std::isfinite(total) ? std::min(1.0, (*chain_.hazard)(l) / total)
                                                     : std::exp(-law.q0 * law.theta);
            if (rng.uniform() < kill) return {t, 0, true};
        }
        return {t, table_.pick(0, rng.uniform()), false};
    }

private:
    const ConditionedChain& chain_;
    Vector row_;
    Vector total_;
    JumpTable table_;
};

// Visitor interface: segment(cursor, end) for each sojourn [cursor.time, end),
// the last one open-ended; jump(t, to) returns false to stop early; death(t).
template <class Dyn, class Visit>
void walk(const Dyn& dyn, Cursor c, double horizon, PathStream& rng, Visit& visit) {
    while (true) {
        Step s = dyn.next(c, rng);
        if (s.time > horizon) {
            visit.segment(c, kInf);
            return;
        }
        visit.segment(c, s.time);
        if (s.dies) {
            visit.death(s.time);
            return;
        }
        c.time = s.time;
        c.state = s.to;
        if (s.to == 0) c.entered = s.time;
        if (!visit.jump(s.time, s.to)) return;
    }
}

struct NoVisit {
    void segment(const Cursor&, double) {}
    bool jump(double, std::size_t) { return true; }
    void death(double) {}
};

struct DeathTime : NoVisit {
    double tau = kInf;
    void death(double t) { tau = t; }
};

struct Recorder {
    SamplePath* path;
    double theta;
    bool threshold_from_holds;

    void segment(const Cursor& c, double end) {
        if (threshold_from_holds && c.state == 0 && !std::isfinite(path->tau) && end - c.entered >= theta &&
            c.entered + theta <= path->horizon)
            path->tau = c.entered + theta;
    }
    bool jump(double t, std::size_t to) {
        path->events.push_back({t, to});
        return true;
    }
    void death(double t) { path->tau = t; }
};

void check_start(std::size_t n_states, const AugmentedState& s, double theta) {
    if (const auto* in = std::get_if<Interior>(&s)) {
        if (in->state == 0 || in->state >= n_states) throw PreconditionError("interior start out of range");
    } else {
        double u = std::get<AtOrigin>(s).clock;
        if (!(u >= 0.0) || !(u < theta)) throw PreconditionError("origin clock must lie in [0, theta)");
    }
}

// Mean and standard error of a Bernoulli sample.
Estimate bernoulli(std::size_t hits, std::size_t n, std::uint64_t seed) {
    Estimate e;
    e.count = n;
    e.seed = seed;
    if (n == 0) return e;
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    e.value = p;
    if (n > 1) e.se = std::sqrt(p * (1.0 - p) * static_cast<double>(n) / static_cast<double>(n - 1) / static_cast<double>(n));
    return e;
}

Estimate moments(double sum, double sumsq, std::size_t n, std::uint64_t seed) {
    Estimate e;
    e.count = n;
    e.seed = seed;
    if (n == 0) return e;
    const double nn = static_cast<double>(n);
    e.value = sum / nn;
    if (n > 1) {
        double var = std::max(0.0, (sumsq - nn * e.value * e.value) / (nn - 1.0));
        e.se = std::sqrt(var / nn);
    }
    return e;
}

struct CountAcc {
    std::vector<std::size_t> alive;
    void merge(const CountAcc& o) {
        for (std::size_t k = 0; k < alive.size(); ++k) alive[k] += o.alive[k];
    }
};

template <class Dyn>
std::vector<Estimate> survival_counts(const Dyn& dyn, const AugmentedState& start, const Vector& t_grid,
                                      std::size_t n_paths, std::uint64_t seed, unsigned threads) {
    if (n_paths < 100) throw PreconditionError("estimate_survival needs at least 100 paths");
    if (t_grid.empty()) return {};
    const double horizon = *std::max_element(t_grid.begin(), t_grid.end());
    CountAcc zero{std::vector<std::size_t>(t_grid.size(), 0)};
    auto acc = reduce_paths(n_paths, threads, zero, [&](CountAcc& a, std::size_t idx) {
        PathStream rng(seed, idx);
        DeathTime v;
        walk(dyn, cursor_at(start), horizon, rng, v);
        for (std::size_t k = 0; k < t_grid.size(); ++k)
            if (v.tau > t_grid[k]) ++a.alive[k];
    });
    std::vector<Estimate> out;
    for (std::size_t k = 0; k < t_grid.size(); ++k) out.push_back(bernoulli(acc.alive[k], n_paths, seed));
    return out;
}

}  // namespace

Vector SamplePath::entries() const {
    Vector s;
    for (std::size_t k = 0; k < events.size(); ++k)
        if (events[k].state == 0) s.push_back(k == 0 ? events[k].time - start_clock : events[k].time);
    return s;
}

Vector SamplePath::departures() const {
    Vector t;
    for (std::size_t k = 1; k < events.size(); ++k)
        if (events[k - 1].state == 0) t.push_back(events[k].time);
    return t;
}

Vector SamplePath::holdings() const {
    auto s = entries();
    auto t = departures();
    Vector h;
    for (std::size_t n = 0; n < std::min(s.size(), t.size()); ++n) h.push_back(t[n] - s[n]);
    return h;
}

Vector SamplePath::returns() const {
    auto s = entries();
    auto t = departures();
    Vector r;
    for (std::size_t n = 0; n < t.size() && n + 1 < s.size(); ++n) r.push_back(s[n + 1] - t[n]);
    return r;
}

SamplePath simulate_path(const ChainSpec& spec, const AugmentedState& start, double horizon, std::uint64_t seed) {
    if (!(horizon > 0.0)) throw PreconditionError("simulate_path needs horizon > 0");
    check_start(spec.n_states(), start, spec.wait_threshold());
    RawDynamics dyn(spec, false);
    SamplePath path;
    path.horizon = horizon;
    Cursor c = cursor_at(start);
    path.start_clock = c.state == 0 ? c.clock() : 0.0;
    path.events.push_back({0.0, c.state});
    PathStream rng(seed, 0);
    Recorder rec{&path, spec.wait_threshold(), true};
    walk(dyn, c, horizon, rng, rec);
    return path;
}

SamplePath simulate_path(const ConditionedChain& chain, const AugmentedState& start, double horizon,
                         std::uint64_t seed) {
    if (!(horizon > 0.0)) throw PreconditionError("simulate_path needs horizon > 0");
    check_start(chain.n_states, start, chain.origin.theta);
    ConditionedDynamics dyn(chain);
    SamplePath path;
    path.horizon = horizon;
    Cursor c = cursor_at(start);
    path.start_clock = c.state == 0 ? c.clock() : 0.0;
    path.events.push_back({0.0, c.state});
    PathStream rng(seed, 0);
    Recorder rec{&path, chain.origin.theta, false};
    walk(dyn, c, horizon, rng, rec);
    return path;
}

std::vector<Estimate> estimate_survival(const ChainSpec& spec, const AugmentedState& start, const Vector& t_grid,
                                        std::size_t n_paths, std::uint64_t seed, McOptions opt) {
    check_start(spec.n_states(), start, spec.wait_threshold());
    return survival_counts(RawDynamics(spec, true), start, t_grid, n_paths, seed, opt.threads);
}

std::vector<Estimate> estimate_survival(const ConditionedChain& chain, const AugmentedState& start,
                                        const Vector& t_grid, std::size_t n_paths, std::uint64_t seed,
                                        McOptions opt) {
    check_start(chain.n_states, start, chain.origin.theta);
    return survival_counts(ConditionedDynamics(chain), start, t_grid, n_paths, seed, opt.threads);
}

TailRatio estimate_tail_ratio(const ChainSpec& spec, const AugmentedState& i, const AugmentedState& j, double v,
                              double t, std::size_t n_paths, std::uint64_t seed, McOptions opt) {
    if (!(v >= 0.0) || !(t > v)) throw PreconditionError("estimate_tail_ratio needs t > v >= 0");
    TailRatio out;
    const double n = static_cast<double>(n_paths);
    double cov = 0.0;
    if (i == j) {
        auto est = estimate_survival(spec, i, {t - v, t}, n_paths, seed, opt);
        out.numerator = est[0];
        out.denominator = est[1];
        // {tau > t} is contained in {tau > t - v}.
        cov = (est[1].value - est[0].value * est[1].value) / n;
    } else {
        out.numerator = estimate_survival(spec, i, {t - v}, n_paths, seed, opt)[0];
        out.denominator = estimate_survival(spec, j, {t}, n_paths, mix64(seed + kGolden), opt)[0];
    }
    const double a = out.numerator.value, b = out.denominator.value;
    const auto survivors = static_cast<std::size_t>(std::llround(b * n));
    out.unreliable = survivors < 10;
    out.ratio.count = n_paths;
    out.ratio.seed = seed;
    if (b == 0.0) {
        out.ratio.value = std::numeric_limits<double>::quiet_NaN();
        out.ratio.se = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double r = a / b;
    out.ratio.value = r;
    double rel = 0.0;
    if (a > 0.0) rel += a * (1.0 - a) / n / (a * a) - 2.0 * cov / (a * b);
    rel += b * (1.0 - b) / n / (b * b);
    out.ratio.se = r * std::sqrt(std::max(0.0, rel));
    return out;
}

SpaceFunction space_function(const LimitVector& p) {
    SpaceFunction h;
    h.interior = p.values;
    h.origin = [p](double u) { return p.origin(u); };
    return h;
}

SpaceFunction space_function(const ConditionedChain& c) {
    SpaceFunction h;
    h.interior = c.h_values;
    h.origin = c.h_origin;
    return h;
}

namespace {

struct MomentAcc {
    Vector sum, sumsq;
    void merge(const MomentAcc& o) {
        for (std::size_t k = 0; k < sum.size(); ++k) {
            sum[k] += o.sum[k];
            sumsq[k] += o.sumsq[k];
        }
    }
};

// Records e^{phi t} h(X_t) at each grid time, frozen at (0, theta) after death.
struct GridSampler : NoVisit {
    const SpaceFunction* h;
    const Vector* grid;       // sorted
    double phi;
    double theta;
    Vector values;
    std::size_t next = 0;

    void segment(const Cursor& c, double end) {
        while (next < grid->size() && (*grid)[next] < end) {
            const double t = (*grid)[next];
            const double clock = c.state == 0 ? t - c.entered : 0.0;
            values[next++] = std::exp(phi * t) * (*h)(c.state, clock);
        }
    }
    void death(double t) {
        const double frozen = std::exp(phi * t) * (*h)(0, theta);
        while (next < grid->size()) values[next++] = frozen;
    }
};

}  // namespace

std::vector<Estimate> verify_harmonic(const ChainSpec& spec, const SpaceFunction& h, double phi,
                                      const Vector& t_grid, std::size_t n_paths, std::uint64_t seed,
                                      const AugmentedState& start, McOptions opt) {
    check_start(spec.n_states(), start, spec.wait_threshold());
    if (h.interior.size() != spec.n_states() || !h.origin)
        throw PreconditionError("h must have one value per chain state and an origin profile");
    for (std::size_t i = 1; i < spec.n_states(); ++i)
        if (!(h.interior[i] > 0.0) || !std::isfinite(h.interior[i]))
            throw PreconditionError("h must be positive and bounded");
    if (t_grid.empty()) return {};
    Vector grid = t_grid;
    std::sort(grid.begin(), grid.end());
    RawDynamics dyn(spec, true);
    const double horizon = grid.back();
    MomentAcc zero{Vector(grid.size(), 0.0), Vector(grid.size(), 0.0)};
    auto acc = reduce_paths(n_paths, opt.threads, zero, [&](MomentAcc& a, std::size_t idx) {
        PathStream rng(seed, idx);
        GridSampler s;
        s.h = &h;
        s.grid = &grid;
        s.phi = phi;
        s.theta = spec.wait_threshold();
        s.values.assign(grid.size(), 0.0);
        walk(dyn, cursor_at(start), horizon, rng, s);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            a.sum[k] += s.values[k];
            a.sumsq[k] += s.values[k] * s.values[k];
        }
    });
    // Report in the caller's order.
    std::vector<Estimate> out;
    for (double t : t_grid) {
        auto k = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), t) - grid.begin());
        out.push_back(moments(acc.sum[k], acc.sumsq[k], n_paths, seed));
    }
    return out;
}

namespace {

struct WindowStats {
    Vector occupation;
    std::size_t jumps = 0;
    double window = 0.0;

    void add(std::size_t state, double from, double to) {
        const double a = std::min(from, window), b = std::min(to, window);
        if (b > a) occupation[state] += b - a;
    }
};

struct WindowVisit : NoVisit {
    WindowStats* stats;
    double death_time = kInf;
    void segment(const Cursor& c, double end) { stats->add(c.state, c.time, end); }
    bool jump(double t, std::size_t) {
        if (t <= stats->window) ++stats->jumps;
        return true;
    }
    void death(double t) { death_time = t; }
};

struct WindowAcc {
    std::size_t n = 0;
    Vector sum, sumsq;
    std::vector<std::size_t> jump_hist;

    void add(const WindowStats& s) {
        ++n;
        for (std::size_t k = 0; k < sum.size(); ++k) {
            double f = s.occupation[k] / s.window;
            sum[k] += f;
            sumsq[k] += f * f;
        }
        if (s.jumps >= jump_hist.size()) jump_hist.resize(s.jumps + 1, 0);
        ++jump_hist[s.jumps];
    }
    void merge(const WindowAcc& o) {
        n += o.n;
        for (std::size_t k = 0; k < sum.size(); ++k) {
            sum[k] += o.sum[k];
            sumsq[k] += o.sumsq[k];
        }
        if (o.jump_hist.size() > jump_hist.size()) jump_hist.resize(o.jump_hist.size(), 0);
        for (std::size_t k = 0; k < o.jump_hist.size(); ++k) jump_hist[k] += o.jump_hist[k];
    }
};

// Two-sample chi-square on count histograms, pooling adjacent bins until each
// expected count is at least 5.
void chi_square_two_sample(std::vector<std::size_t> a, std::vector<std::size_t> b, std::size_t na,
                           std::size_t nb, DivergenceReport& r) {
    const std::size_t len = std::max(a.size(), b.size());
    a.resize(len, 0);
    b.resize(len, 0);
    const double fa = static_cast<double>(na) / static_cast<double>(na + nb);
    const double fb = 1.0 - fa;
    std::vector<std::pair<double, double>> bins;
    double oa = 0.0, ob = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
        oa += static_cast<double>(a[k]);
        ob += static_cast<double>(b[k]);
        if ((oa + ob) * fa >= 5.0 && (oa + ob) * fb >= 5.0) {
            bins.emplace_back(oa, ob);
            oa = ob = 0.0;
        }
    }
    if (oa + ob > 0.0) {
        if (bins.empty()) {
            bins.emplace_back(oa, ob);
        } else {
            bins.back().first += oa;
            bins.back().second += ob;
        }
    }
    r.chi_square = 0.0;
    r.dof = bins.size() > 1 ? bins.size() - 1 : 0;
    if (r.dof == 0) {
        r.p_value = 1.0;
        return;
    }
    const double ka = std::sqrt(static_cast<double>(nb) / static_cast<double>(na));
    const double kb = std::sqrt(static_cast<double>(na) / static_cast<double>(nb));
    for (const auto& [x, y] : bins) {
        const double d = ka * x - kb * y;
        r.chi_square += d * d / (x + y);
    }
    boost::math::chi_squared dist(static_cast<double>(r.dof));
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.chi_square));
}

}  // namespace

namespace {

OccupationSample finish(const WindowAcc& acc, std::size_t proposals, std::uint64_t seed) {
    OccupationSample out;
    out.proposals = proposals;
    out.kept = acc.n;
    for (std::size_t k = 0; k < acc.sum.size(); ++k) out.fractions.push_back(moments(acc.sum[k], acc.sumsq[k], acc.n, seed));
    out.jump_counts = acc.jump_hist;
    return out;
}

WindowAcc empty_window(std::size_t n) {
    WindowAcc zero;
    zero.sum.assign(n, 0.0);
    zero.sumsq.assign(n, 0.0);
    return zero;
}

}  // namespace

OccupationSample occupation_rejection(const ChainSpec& spec, double horizon_T, double window, std::size_t n_paths,
                                      std::uint64_t seed, McOptions opt) {
    if (!(window > 0.0) || !(window <= horizon_T)) throw PreconditionError("rejection sampling needs 0 < s <= T");
    const std::size_t n = spec.n_states();
    RawDynamics raw(spec, true);
    auto acc = reduce_paths(n_paths, opt.threads, empty_window(n), [&](WindowAcc& a, std::size_t idx) {
        PathStream rng(seed, idx);
        WindowStats st{Vector(n, 0.0), 0, window};
        WindowVisit v;
        v.stats = &st;
        walk(raw, Cursor{}, horizon_T, rng, v);
        if (v.death_time > horizon_T) a.add(st);
    });
    const double rate = n_paths ? static_cast<double>(acc.n) / static_cast<double>(n_paths) : 0.0;
    if (rate < 1e-4 || acc.n < 2)
        throw InfeasibleError(rate, "rejection acceptance rate " + std::to_string(rate) +
                                        " is below 1e-4; lower T or pick a smaller spec");
    return finish(acc, n_paths, seed);
}

OccupationSample occupation_conditioned(const ConditionedChain& cond, double window, std::size_t n_paths,
                                        std::uint64_t seed, McOptions opt) {
    if (!(window > 0.0)) throw PreconditionError("observation window must be positive");
    const std::size_t n = cond.n_states;
    ConditionedDynamics dyn(cond);
    auto acc = reduce_paths(n_paths, opt.threads, empty_window(n), [&](WindowAcc& a, std::size_t idx) {
        PathStream rng(seed, idx);
        WindowStats st{Vector(n, 0.0), 0, window};
        WindowVisit v;
        v.stats = &st;
        walk(dyn, Cursor{}, window, rng, v);
        a.add(st);
    });
    return finish(acc, n_paths, seed);
}

DivergenceReport compare_occupation(const OccupationSample& rej, const OccupationSample& cond) {
    if (rej.fractions.size() != cond.fractions.size()) throw PreconditionError("samples cover different chains");
    DivergenceReport r;
    r.proposals = rej.proposals;
    r.accepted = rej.kept;
    r.acceptance = rej.proposals ? static_cast<double>(rej.kept) / static_cast<double>(rej.proposals) : 0.0;
    r.conditioned_paths = cond.kept;
    for (std::size_t k = 0; k < rej.fractions.size(); ++k) {
        const auto& er = rej.fractions[k];
        const auto& ec = cond.fractions[k];
        double diff = er.value - ec.value;
        double se = std::hypot(er.se, ec.se);
        r.occupation_rejection.push_back(er.value);
        r.occupation_conditioned.push_back(ec.value);
        r.occupation_diff.push_back(diff);
        r.occupation_se.push_back(se);
        r.max_abs_diff = std::max(r.max_abs_diff, std::abs(diff));
        double z = se > 0.0 ? std::abs(diff) / se : (diff == 0.0 ? 0.0 : kInf);
        r.max_z = std::max(r.max_z, z);
    }
    chi_square_two_sample(rej.jump_counts, cond.jump_counts, rej.kept, cond.kept, r);
    return r;
}

std::string occupation_csv(const OccupationSample& s) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "state,estimate,stderr,n_paths,seed\n";
    for (std::size_t k = 0; k < s.fractions.size(); ++k)
        os << k << ',' << s.fractions[k].value << ',' << s.fractions[k].se << ',' << s.fractions[k].count << ','
           << s.fractions[k].seed << '\n';
    return os.str();
}

DivergenceReport conditioned_vs_rejection(const ChainSpec& spec, const ConditionedChain& cond, double horizon_T,
                                          double window, std::size_t n_paths, std::uint64_t seed,
                                          McOptions opt) {
    if (cond.n_states != spec.n_states()) throw PreconditionError("conditioned chain does not match the spec");
    auto rej = occupation_rejection(spec, horizon_T, window, n_paths, seed, opt);
    auto direct = occupation_conditioned(cond, window, n_paths, mix64(seed ^ 0xC0FFEEULL), opt);
    return compare_occupation(rej, direct);
}

SubexpDiagnostic subexp_diagnostic(const Vector& samples, std::size_t order, const Vector& t_grid,
                                   std::uint64_t seed, double tolerance, double censor) {
    if (order < 2) throw PreconditionError("subexp_diagnostic needs convolution order n >= 2");
    if (samples.size() < 2) throw PreconditionError("subexp_diagnostic needs at least two samples");
    SubexpDiagnostic d;
    d.bound = static_cast<double>(order) * (1.0 + tolerance);

    Vector sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    d.degenerate = sorted.front() == sorted.back();

    const std::size_t m = samples.size();
    Vector sums(m);
    for (std::size_t k = 0; k < m; ++k) {
        PathStream rng(seed, k);
        double s = 0.0;
        for (std::size_t r = 0; r < order; ++r) s += samples[rng.below(m)];
        sums[k] = s;
    }
    std::sort(sums.begin(), sums.end());
    auto beyond = [](const Vector& v, double t) {
        return static_cast<std::size_t>(v.end() - std::upper_bound(v.begin(), v.end(), t));
    };

    const double median_sum = sums[m / 2];
    if (beyond(sorted, median_sum) < kMinTailSamples) d.unreliable = true;

    for (double t : t_grid) {
        if (!(t < censor)) continue;
        const std::size_t tail = beyond(sorted, t);
        const bool observable = d.degenerate ? tail > 0 : tail >= kMinTailSamples;
        if (!observable) continue;
        d.curve.push_back({t, static_cast<double>(beyond(sums, t)) / static_cast<double>(tail), tail});
    }
    if (d.curve.empty()) d.unreliable = true;
    if (d.degenerate) d.unreliable = true;
    if (!d.curve.empty()) {
        const double top = d.curve.back().t;
        for (const auto& p : d.curve)
            if (p.t >= top / 10.0) d.last_decade_max = std::max(d.last_decade_max, p.ratio);
    }
    d.consistent = !d.unreliable && d.last_decade_max <= d.bound;
    return d;
}

namespace {

struct HitVisit : NoVisit {
    double hit = kInf;
    bool jump(double t, std::size_t to) {
        if (to != 0) return true;
        hit = t;
        return false;
    }
};

struct SampleAcc {
    Vector values;
    void merge(const SampleAcc& o) { values.insert(values.end(), o.values.begin(), o.values.end()); }
};

}  // namespace

Vector sample_hitting_times(const ChainSpec& spec, std::size_t state, std::size_t n, double horizon,
                            std::uint64_t seed, McOptions opt) {
    check_start(spec.n_states(), Interior{state}, spec.wait_threshold());
    if (!(horizon > 0.0)) throw PreconditionError("sample_hitting_times needs horizon > 0");
    RawDynamics dyn(spec, false);
    auto acc = reduce_paths(n, opt.threads, SampleAcc{}, [&](SampleAcc& a, std::size_t idx) {
        PathStream rng(seed, idx);
        HitVisit v;
        Cursor c;
        c.state = state;
        walk(dyn, c, horizon, rng, v);
        a.values.push_back(std::min(v.hit, horizon));
    });
    return acc.values;
}

Vector log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) throw PreconditionError("log_grid needs 0 < lo < hi, count >= 2");
    Vector g(count);
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) g[k] = lo * std::exp(step * static_cast<double>(k));
    g.back() = hi;
    return g;
}

std::string estimates_csv(const Vector& t_grid, const std::vector<Estimate>& est) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "t,estimate,stderr,n_paths,seed\n";
    for (std::size_t k = 0; k < est.size(); ++k)
        os << t_grid[k] << ',' << est[k].value << ',' << est[k].se << ',' << est[k].count << ',' << est[k].seed
           << '\n';
    return os.str();
}

}  // namespace holdtime
