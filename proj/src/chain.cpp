#include "holdtime/chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace holdtime {

using json = nlohmann::json;

const char* to_string(Violation v) noexcept {
    switch (v) {
        case Violation::NegativeRate: return "negative rate";
        case Violation::AbsorbingState: return "absorbing state";
        case Violation::NotStronglyConnected: return "not strongly connected";
        case Violation::InteriorNotStronglyConnected: return "interior not strongly connected";
        case Violation::ZeroOriginRate: return "zero q_0";
        case Violation::InteriorSelfLoop: return "interior self-loop";
        case Violation::NonFiniteRate: return "non-finite rate";
        case Violation::BadThreshold: return "bad wait threshold";
        case Violation::BadBoundary: return "bad truncation boundary";
    }
    return "unknown";
}

bool ValidationReport::has(Violation v) const noexcept {
    return std::any_of(violations.begin(), violations.end(),
                       [v](const ViolationEntry& e) { return e.tag == v; });
}

std::string ValidationReport::summary() const {
    if (violations.empty()) return "valid";
    std::ostringstream os;
    os << "invalid chain spec:";
    for (const auto& v : violations) os << " [" << to_string(v.tag) << ": " << v.detail << "]";
    return os.str();
}

namespace {

// Reachability over positive rates restricted to `allowed`, forward or reversed.
std::vector<char> reach(std::size_t n, const std::vector<double>& dense, std::size_t start,
                        const std::vector<char>& allowed, bool reversed) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
        std::size_t i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < n; ++j) {
            if (seen[j] || !allowed[j]) continue;
            double r = reversed ? dense[j * n + i] : dense[i * n + j];
            if (r > 0.0) {
                seen[j] = 1;
                stack.push_back(j);
            }
        }
    }
    return seen;
}

}  // namespace

ValidationReport ChainSpec::validate(std::size_t n, const std::vector<RateEntry>& rates,
                                     double threshold, const std::vector<std::size_t>& boundary) {
    ValidationReport rep;
    auto add = [&](Violation v, std::string d) { rep.violations.push_back({v, std::move(d)}); };

    if (n == 0) {
        add(Violation::AbsorbingState, "chain has no states");
        return rep;
    }
    if (!(std::isfinite(threshold) && threshold > 0.0))
        add(Violation::BadThreshold, "wait_threshold must be finite and positive");

    std::vector<double> dense(n * n, 0.0);
    for (const auto& e : rates) {
        if (e.from >= n || e.to >= n) {
            add(Violation::BadBoundary, "rate index out of range");
            continue;
        }
        std::string where = "q(" + std::to_string(e.from) + "," + std::to_string(e.to) + ")";
        if (!std::isfinite(e.rate)) {
            add(Violation::NonFiniteRate, where);
            continue;
        }
        if (e.rate < 0.0) add(Violation::NegativeRate, where + " = " + std::to_string(e.rate));
        if (e.from == e.to && e.from != 0 && e.rate != 0.0) add(Violation::InteriorSelfLoop, where);
        dense[e.from * n + e.to] += e.rate;
    }
    for (std::size_t b : boundary)
        if (b == 0 || b >= n) add(Violation::BadBoundary, "state " + std::to_string(b));

    for (std::size_t i = 0; i < n; ++i) {
        double qi = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i || i == 0) qi += std::max(dense[i * n + j], 0.0);
        if (qi <= 0.0) {
            if (i == 0)
                add(Violation::ZeroOriginRate, "q_0 = 0");
            else
                add(Violation::AbsorbingState, "state " + std::to_string(i));
        }
    }

    std::vector<char> all(n, 1);
    auto fwd = reach(n, dense, 0, all, false);
    auto bwd = reach(n, dense, 0, all, true);
    for (std::size_t i = 0; i < n; ++i) {
        if (!fwd[i] || !bwd[i]) {
            add(Violation::NotStronglyConnected, "state " + std::to_string(i) + " not mutually reachable with 0");
            break;
        }
    }
    if (n > 2) {
        std::vector<char> interior(n, 1);
        interior[0] = 0;
        auto f = reach(n, dense, 1, interior, false);
        auto b = reach(n, dense, 1, interior, true);
        for (std::size_t i = 1; i < n; ++i) {
            if (!f[i] || !b[i]) {
                add(Violation::InteriorNotStronglyConnected,
                    "state " + std::to_string(i) + " not mutually reachable with 1 inside C");
                break;
            }
        }
    }
    return rep;
}

ChainSpec ChainSpec::create(std::size_t n, const std::vector<RateEntry>& rates, double threshold,
                            std::vector<std::size_t> boundary) {
    auto rep = validate(n, rates, threshold, boundary);
    if (!rep.ok()) throw ValidationError(std::move(rep));

    ChainSpec s;
    s.n_ = n;
    s.threshold_ = threshold;
    s.rates_.assign(n * n, 0.0);
    for (const auto& e : rates) s.rates_[e.from * n + e.to] += e.rate;
    s.exit_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (j != i || i == 0) s.exit_[i] += s.rates_[i * n + j];
    std::sort(boundary.begin(), boundary.end());
    boundary.erase(std::unique(boundary.begin(), boundary.end()), boundary.end());
    s.boundary_ = std::move(boundary);
    return s;
}

bool ChainSpec::is_boundary(std::size_t i) const {
    return std::binary_search(boundary_.begin(), boundary_.end(), i);
}

std::vector<RateEntry> ChainSpec::entries() const {
    std::vector<RateEntry> out;
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
            if (rates_[i * n_ + j] > 0.0) out.push_back({i, j, rates_[i * n_ + j]});
    return out;
}

std::vector<std::size_t> ChainSpec::into_origin() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i < n_; ++i)
        if (rate(i, 0) > 0.0) out.push_back(i);
    return out;
}

std::vector<std::size_t> ChainSpec::origin_targets() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 1; j < n_; ++j)
        if (rate(0, j) > 0.0) out.push_back(j);
    return out;
}

ChainSpec ChainSpec::rescaled(double c) const {
    auto e = entries();
    for (auto& r : e) r.rate *= c;
    return create(n_, e, threshold_ / c, boundary_);
}

namespace {

std::vector<double> expand_profile(const RateProfile& p, std::size_t count, const char* name) {
    if (const double* v = std::get_if<double>(&p)) return std::vector<double>(count, *v);
    const auto& list = std::get<std::vector<double>>(p);
    if (list.size() != count)
        throw PreconditionError(std::string("per-state ") + name + " list needs " +
                                std::to_string(count) + " entries, got " + std::to_string(list.size()));
    return list;
}

}  // namespace

ChainSpec build_birth_death(const RateProfile& b, const RateProfile& d, std::size_t n,
                            const std::vector<std::pair<std::size_t, double>>& origin_exits,
                            double wait_threshold) {
    if (n < 2) throw PreconditionError("birth-death truncation level must be at least 2");
    auto births = expand_profile(b, n - 1, "b");
    auto deaths = expand_profile(d, n, "d");
    std::vector<RateEntry> rates;
    for (const auto& [j, r] : origin_exits) {
        if (j == 0 || j >= n) throw PreconditionError("origin exit target must lie in 1..n-1");
        rates.push_back({0, j, r});
    }
    for (std::size_t i = 1; i <= n; ++i) {
        if (i < n) rates.push_back({i, i + 1, births[i - 1]});
        rates.push_back({i, i - 1, deaths[i - 1]});
    }
    // Zero rates would silently cut edges; report them like any other violation.
    ValidationReport rep;
    for (const auto& r : rates)
        if (!(r.rate > 0.0))
            rep.violations.push_back({r.rate < 0.0 ? Violation::NegativeRate : Violation::AbsorbingState,
                                      "q(" + std::to_string(r.from) + "," + std::to_string(r.to) +
                                          ") = " + std::to_string(r.rate)});
    if (!rep.ok()) throw ValidationError(std::move(rep));
    return ChainSpec::create(n + 1, rates, wait_threshold, {n});
}

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

double number_at(const json& j, const std::string& field) {
    if (!j.is_number()) throw ParseError(0, field, "expected a number at " + field);
    return j.get<double>();
}

std::size_t index_at(const json& j, const std::string& field) {
    if (!j.is_number_integer() && !j.is_number_unsigned())
        throw ParseError(0, field, "expected a nonnegative integer at " + field);
    auto v = j.get<long long>();
    if (v < 0) throw ParseError(0, field, "expected a nonnegative integer at " + field);
    return static_cast<std::size_t>(v);
}

RateProfile profile_at(const json& j, const std::string& field) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_array()) throw ParseError(0, field, "expected a number or array at " + field);
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k)
        out.push_back(number_at(j[k], field + "[" + std::to_string(k) + "]"));
    return out;
}

ChainSpec from_birth_death(const json& bd, double threshold) {
    if (!bd.is_object()) throw ParseError(0, "birth_death", "birth_death must be an object");
    for (const char* key : {"b", "d", "n"})
        if (!bd.contains(key)) throw ParseError(0, std::string("birth_death.") + key, "missing field");
    auto n = index_at(bd["n"], "birth_death.n");
    std::vector<std::pair<std::size_t, double>> exits;
    if (bd.contains("origin_exits")) {
        const auto& ex = bd["origin_exits"];
        if (!ex.is_array()) throw ParseError(0, "birth_death.origin_exits", "expected an array of pairs");
        for (std::size_t k = 0; k < ex.size(); ++k) {
            std::string f = "birth_death.origin_exits[" + std::to_string(k) + "]";
            if (!ex[k].is_array() || ex[k].size() != 2) throw ParseError(0, f, "expected [state, rate]");
            exits.emplace_back(index_at(ex[k][0], f + "[0]"), number_at(ex[k][1], f + "[1]"));
        }
    } else {
        exits.emplace_back(1, 1.0);
    }
    return build_birth_death(profile_at(bd["b"], "birth_death.b"), profile_at(bd["d"], "birth_death.d"),
                             n, exits, threshold);
}

}  // namespace

ChainSpec parse_spec(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(line_of(text, e.byte), "", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError(1, "", "chain spec must be a JSON object");

    double threshold = 1.0;
    if (doc.contains("wait_threshold")) threshold = number_at(doc["wait_threshold"], "wait_threshold");

    if (doc.contains("birth_death")) return from_birth_death(doc["birth_death"], threshold);

    if (!doc.contains("n_states")) throw ParseError(0, "n_states", "missing field n_states");
    if (!doc.contains("rates")) throw ParseError(0, "rates", "missing field rates");
    auto n = index_at(doc["n_states"], "n_states");
    const auto& arr = doc["rates"];
    if (!arr.is_array()) throw ParseError(0, "rates", "rates must be an array of [i, j, rate] triples");

    std::vector<RateEntry> rates;
    std::vector<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t k = 0; k < arr.size(); ++k) {
        std::string f = "rates[" + std::to_string(k) + "]";
        const auto& t = arr[k];
        if (!t.is_array() || t.size() != 3) throw ParseError(0, f, "expected [i, j, rate]");
        RateEntry e{index_at(t[0], f + "[0]"), index_at(t[1], f + "[1]"), number_at(t[2], f + "[2]")};
        if (e.from >= n || e.to >= n) throw ParseError(0, f, "state index out of range in " + f);
        if (std::find(seen.begin(), seen.end(), std::make_pair(e.from, e.to)) != seen.end())
            throw ParseError(0, f, "duplicate rate entry in " + f);
        seen.emplace_back(e.from, e.to);
        rates.push_back(e);
    }
    std::vector<std::size_t> boundary;
    if (doc.contains("truncation_boundary")) {
        const auto& b = doc["truncation_boundary"];
        if (!b.is_array()) throw ParseError(0, "truncation_boundary", "expected an array of states");
        for (std::size_t k = 0; k < b.size(); ++k)
            boundary.push_back(index_at(b[k], "truncation_boundary[" + std::to_string(k) + "]"));
    }
    return ChainSpec::create(n, rates, threshold, boundary);
}

ChainSpec load_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(0, path, "cannot open chain spec file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

std::string emit_spec(const ChainSpec& spec) {
    json doc;
    doc["n_states"] = spec.n_states();
    json rates = json::array();
    for (const auto& e : spec.entries()) rates.push_back({e.from, e.to, e.rate});
    doc["rates"] = std::move(rates);
    doc["wait_threshold"] = spec.wait_threshold();
    if (spec.has_boundary()) doc["truncation_boundary"] = spec.truncation_boundary();
    return doc.dump(2);
}

void check_state(const ChainSpec& spec, const AugmentedState& s) {
    if (const auto* in = std::get_if<Interior>(&s)) {
        if (in->state == 0 || in->state >= spec.n_states())
            throw PreconditionError("interior state " + std::to_string(in->state) + " out of range");
        return;
    }
    double u = std::get<AtOrigin>(s).clock;
    if (!(u >= 0.0 && u < spec.wait_threshold()))
        throw PreconditionError("origin clock must lie in [0, wait_threshold)");
}

std::string to_string(const AugmentedState& s) {
    if (const auto* in = std::get_if<Interior>(&s)) return std::to_string(in->state);
    std::ostringstream os;
    os << "0:" << std::get<AtOrigin>(s).clock;
    return os.str();
}

AugmentedState parse_state(std::string_view text) {
    std::string t(text);
    auto colon = t.find(':');
    try {
        if (colon == std::string::npos) {
            std::size_t pos = 0;
            long long v = std::stoll(t, &pos);
            if (pos != t.size() || v < 0) throw std::invalid_argument(t);
            if (v == 0) return AtOrigin{0.0};
            return Interior{static_cast<std::size_t>(v)};
        }
        if (t.substr(0, colon) != "0") throw std::invalid_argument(t);
        std::size_t pos = 0;
        std::string rest = t.substr(colon + 1);
        double u = std::stod(rest, &pos);
        if (pos != rest.size()) throw std::invalid_argument(t);
        return AtOrigin{u};
    } catch (const std::logic_error&) {
        throw ParseError(0, "state", "cannot parse augmented state '" + t + "' (use i or 0:u)");
    }
}

}  // namespace holdtime
