#include "spamwatch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "spamwatch/errors.hpp"
#include "spamwatch/parse.hpp"

namespace spamwatch {

std::uint64_t SynthRng::next_u64() {
    // splitmix64: tiny, seedable, stable across platforms
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SynthRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::int64_t SynthRng::uniform_int(std::int64_t n) {
    if (n <= 0) return 0;
    auto v = static_cast<std::int64_t>(uniform() * static_cast<double>(n));
    return v >= n ? n - 1 : v;
}

std::int64_t SynthRng::poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::int64_t total = 0;
    // Split large means so Knuth's product never underflows.
    while (mean > 60.0) {
        double chunk = 60.0;
        const double l = std::exp(-chunk);
        std::int64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > l);
        total += k - 1;
        mean -= chunk;
    }
    const double l = std::exp(-mean);
    std::int64_t k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= uniform();
    } while (p > l);
    return total + k - 1;
}

int SynthRng::categorical(const std::array<double, 5>& probs) {
    const double u = uniform();
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) {
        acc += probs[static_cast<std::size_t>(i)];
        if (u < acc) return i;
    }
    return 4;
}

double SynthRng::normal() {
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

namespace {

void check_probs(const std::array<double, 5>& probs, const char* what) {
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw ConfigError(std::string(what) + ": negative probability");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw ConfigError(std::string(what) + ": probabilities must sum to 1");
    }
}

std::array<double, 5> lerp_probs(const std::array<double, 5>& a,
                                 const std::array<double, 5>& b, double t) {
    std::array<double, 5> out{};
    for (int i = 0; i < 5; ++i) {
        out[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] +
            (b[static_cast<std::size_t>(i)] - a[static_cast<std::size_t>(i)]) * t;
    }
    return out;
}

// Deterministic rating rotation hitting the distribution's quantiles.
int quantile_rating(const std::array<double, 5>& probs, double q) {
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) {
        acc += probs[static_cast<std::size_t>(i)];
        if (q < acc) return i;
    }
    return 4;
}

}  // namespace

std::string ScenarioSpec::product_id(std::int64_t index) const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "p%05lld", static_cast<long long>(index));
    return buf;
}

void ScenarioSpec::validate() const {
    if (product_count <= 0) throw ConfigError("scenario: product_count must be positive");
    if (window_count <= 0) throw ConfigError("scenario: window_count must be positive");
    if (organic_rate < 0) throw ConfigError("scenario: organic_rate must be >= 0");
    if (delta_t <= 0) throw ConfigError("scenario: delta_t must be positive");
    if (user_pool_size <= 0) throw ConfigError("scenario: user_pool_size must be positive");
    check_probs(organic_rating_probs, "organic rating distribution");
    for (const auto& ov : overrides) {
        if (ov.rate < 0) throw ConfigError("override: rate must be >= 0");
        check_probs(ov.probs_start, "override rating distribution");
        check_probs(ov.probs_end, "override rating distribution");
    }
    for (const auto& c : campaigns) {
        if (c.start_window < 0 || c.start_window >= window_count) {
            throw ConfigError("campaign: start_window out of range");
        }
        if (c.duration_windows <= 0) throw ConfigError("campaign: duration must be positive");
        if (c.reviews_per_window <= 0) {
            throw ConfigError("campaign: reviews_per_window must be positive");
        }
        if (c.recurrence_period < 0) throw ConfigError("campaign: negative recurrence");
        check_probs(c.rating_probs, "campaign rating distribution");
        const double fsum = c.frac_singletons + c.frac_first_timers + c.frac_aged;
        if (c.frac_singletons < 0 || c.frac_first_timers < 0 || c.frac_aged < 0 ||
            std::fabs(fsum - 1.0) > 1e-9) {
            throw ConfigError("campaign: reviewer-mix fractions must be in [0,1] and sum to 1");
        }
        const auto aged = static_cast<std::int64_t>(
            std::llround(c.frac_aged * static_cast<double>(c.reviews_per_window)));
        if (aged > user_pool_size) {
            throw ConfigError("campaign: reviews exceed the user pool under the reviewer-mix "
                              "constraint (aged reviewers needed > pool size)");
        }
    }
}

GeneratedStream generate(const ScenarioSpec& scenario, std::uint64_t seed) {
    scenario.validate();
    SynthRng rng(seed);
    GeneratedStream out;

    std::unordered_map<std::string, const ProductOverride*> override_by_id;
    for (const auto& ov : scenario.overrides) override_by_id[ov.product_id] = &ov;

    const auto pool = scenario.user_pool_size;
    auto pool_user = [&](std::int64_t k) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "u%07lld", static_cast<long long>(k));
        return std::string(buf);
    };
    // Zipf activity: cumulative 1/(k+1)^s weights, sampled by bisection.
    std::vector<double> zipf_cdf;
    if (scenario.activity == PoolActivity::zipf) {
        zipf_cdf.resize(static_cast<std::size_t>(pool));
        double acc = 0.0;
        for (std::int64_t k = 0; k < pool; ++k) {
            acc += 1.0 / std::pow(static_cast<double>(k + 1), scenario.zipf_exponent);
            zipf_cdf[static_cast<std::size_t>(k)] = acc;
        }
        for (auto& v : zipf_cdf) v /= acc;
    }
    auto sample_pool_user = [&]() {
        if (scenario.activity == PoolActivity::uniform) {
            return pool_user(rng.uniform_int(pool));
        }
        const double u = rng.uniform();
        const auto it = std::lower_bound(zipf_cdf.begin(), zipf_cdf.end(), u);
        return pool_user(it - zipf_cdf.begin());
    };

    // Pool users that have already posted, for aged campaign reviewers.
    std::vector<std::string> appeared;
    std::unordered_set<std::string> appeared_set;
    auto mark_appeared = [&](const std::string& uid) {
        if (appeared_set.insert(uid).second) appeared.push_back(uid);
    };

    std::int64_t fresh_counter = 0;
    auto fresh_user = [&]() {
        char buf[32];
        std::snprintf(buf, sizeof buf, "s%07lld", static_cast<long long>(fresh_counter++));
        return std::string(buf);
    };

    auto window_start = [&](std::int64_t w) { return scenario.base_time + w * scenario.delta_t; };

    // Campaign occurrences flattened up front so injection happens in window
    // order, interleaved with the organic pass.
    struct Occurrence {
        const CampaignSpec* campaign;
        std::int64_t window;
        std::string id;
    };
    std::vector<Occurrence> occurrences;
    for (std::size_t ci = 0; ci < scenario.campaigns.size(); ++ci) {
        const CampaignSpec& c = scenario.campaigns[ci];
        std::int64_t occ = 0;
        for (std::int64_t start = c.start_window; start < scenario.window_count;
             start += c.recurrence_period) {
            for (std::int64_t d = 0; d < c.duration_windows; ++d) {
                const std::int64_t w = start + d;
                if (w >= scenario.window_count) break;
                occurrences.push_back(
                    {&c, w, "c" + std::to_string(ci) + "o" + std::to_string(occ)});
            }
            ++occ;
            if (c.recurrence_period == 0) break;
        }
    }
    std::stable_sort(occurrences.begin(), occurrences.end(),
                     [](const Occurrence& a, const Occurrence& b) { return a.window < b.window; });
    std::size_t next_occ = 0;

    for (std::int64_t w = 0; w < scenario.window_count; ++w) {
        for (std::int64_t p = 0; p < scenario.product_count; ++p) {
            const std::string pid = scenario.product_id(p);
            double rate = scenario.organic_rate;
            std::array<double, 5> probs = scenario.organic_rating_probs;
            if (auto it = override_by_id.find(pid); it != override_by_id.end()) {
                const ProductOverride& ov = *it->second;
                rate = ov.rate;
                if (ov.drift_end_window > ov.drift_start_window) {
                    const double t = std::clamp(
                        static_cast<double>(w - ov.drift_start_window) /
                            static_cast<double>(ov.drift_end_window - ov.drift_start_window),
                        0.0, 1.0);
                    probs = lerp_probs(ov.probs_start, ov.probs_end, t);
                } else {
                    probs = ov.probs_start;
                }
            }
            const std::int64_t n = scenario.deterministic_organic
                                       ? static_cast<std::int64_t>(std::llround(rate))
                                       : rng.poisson(rate);
            for (std::int64_t i = 0; i < n; ++i) {
                ReviewUnit r;
                r.product_id = pid;
                if (scenario.deterministic_organic) {
                    r.timestamp = window_start(w) +
                                  (i + 1) * scenario.delta_t / (n + 1);
                    r.rating = 1 + quantile_rating(
                                       probs, (static_cast<double>(i) + 0.5) /
                                                  static_cast<double>(n));
                    r.user_id = pool_user((p * 131 + i) % pool);
                } else {
                    r.timestamp = window_start(w) + rng.uniform_int(scenario.delta_t);
                    r.rating = 1 + rng.categorical(probs);
                    r.user_id = sample_pool_user();
                }
                mark_appeared(r.user_id);
                out.reviews.push_back(std::move(r));
            }
        }

        for (; next_occ < occurrences.size() && occurrences[next_occ].window == w; ++next_occ) {
            const Occurrence& occ = occurrences[next_occ];
            const CampaignSpec& c = *occ.campaign;
            out.truth.push_back({c.target_product, w, occ.id});

            const std::int64_t n = c.reviews_per_window;
            auto singles = static_cast<std::int64_t>(
                std::llround(c.frac_singletons * static_cast<double>(n)));
            auto firsts = static_cast<std::int64_t>(
                std::llround(c.frac_first_timers * static_cast<double>(n)));
            if (singles + firsts > n) firsts = n - singles;
            const std::int64_t aged = n - singles - firsts;
            if (aged > 0 && appeared.empty()) {
                throw ConfigError("campaign at window " + std::to_string(w) +
                                  ": no aged reviewers available yet in the user pool");
            }

            for (std::int64_t i = 0; i < n; ++i) {
                ReviewUnit r;
                r.product_id = c.target_product;
                r.timestamp = c.arrival == ArrivalPattern::bursty_robotic
                                  ? window_start(w) + (i + 1) * scenario.delta_t / (n + 1)
                                  : window_start(w) + rng.uniform_int(scenario.delta_t);
                r.rating = 1 + rng.categorical(c.rating_probs);
                if (i < singles) {
                    r.user_id = fresh_user();
                } else if (i < singles + firsts) {
                    r.user_id = fresh_user();
                    // A first-timer that is not a singleton also reviews some
                    // other product within the same window.
                    ReviewUnit extra;
                    extra.user_id = r.user_id;
                    std::int64_t q = (i + 1) % scenario.product_count;
                    if (scenario.product_id(q) == c.target_product) {
                        q = (q + 1) % scenario.product_count;
                    }
                    extra.product_id = scenario.product_id(q);
                    extra.timestamp = std::min(r.timestamp + 60,
                                               window_start(w) + scenario.delta_t - 1);
                    extra.rating = 1 + rng.categorical(c.rating_probs);
                    out.reviews.push_back(std::move(extra));
                } else {
                    r.user_id = appeared[static_cast<std::size_t>(
                        rng.uniform_int(static_cast<std::int64_t>(appeared.size())))];
                }
                out.reviews.push_back(std::move(r));
            }
        }
    }

    std::stable_sort(out.reviews.begin(), out.reviews.end(),
                     [](const ReviewUnit& a, const ReviewUnit& b) {
                         return a.timestamp < b.timestamp;
                     });
    return out;
}

namespace {

std::array<double, 5> probs_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 5) {
        throw ConfigError("rating distribution must be an array of 5 probabilities");
    }
    std::array<double, 5> out{};
    for (int i = 0; i < 5; ++i) out[static_cast<std::size_t>(i)] = j[static_cast<std::size_t>(i)].get<double>();
    return out;
}

nlohmann::json probs_to_json(const std::array<double, 5>& probs) {
    return nlohmann::json(std::vector<double>(probs.begin(), probs.end()));
}

}  // namespace

ScenarioSpec scenario_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid scenario JSON: ") + e.what());
    }
    ScenarioSpec s;
    s.product_count = j.at("product_count").get<std::int64_t>();
    s.window_count = j.at("window_count").get<std::int64_t>();
    s.organic_rate = j.at("organic_rate").get<double>();
    if (j.contains("organic_rating_probs")) {
        s.organic_rating_probs = probs_from_json(j.at("organic_rating_probs"));
    }
    s.user_pool_size = j.at("user_pool_size").get<std::int64_t>();
    if (j.contains("activity")) {
        const auto a = j.at("activity").get<std::string>();
        if (a == "uniform") s.activity = PoolActivity::uniform;
        else if (a == "zipf") s.activity = PoolActivity::zipf;
        else throw ConfigError("scenario: unknown activity '" + a + "'");
    }
    s.zipf_exponent = j.value("zipf_exponent", 1.0);
    s.delta_t = j.value("delta_t", std::int64_t{604800});
    s.base_time = j.value("base_time", std::int64_t{0});
    s.deterministic_organic = j.value("deterministic_organic", false);
    for (const auto& o : j.value("overrides", nlohmann::json::array())) {
        ProductOverride ov;
        ov.product_id = o.at("product_id").get<std::string>();
        ov.rate = o.at("rate").get<double>();
        ov.probs_start = probs_from_json(o.at("probs_start"));
        ov.probs_end = o.contains("probs_end") ? probs_from_json(o.at("probs_end"))
                                               : ov.probs_start;
        ov.drift_start_window = o.value("drift_start_window", std::int64_t{0});
        ov.drift_end_window = o.value("drift_end_window", std::int64_t{0});
        s.overrides.push_back(std::move(ov));
    }
    for (const auto& c : j.value("campaigns", nlohmann::json::array())) {
        CampaignSpec cs;
        cs.target_product = c.at("target_product").get<std::string>();
        cs.start_window = c.at("start_window").get<std::int64_t>();
        cs.duration_windows = c.value("duration_windows", std::int64_t{1});
        cs.reviews_per_window = c.at("reviews_per_window").get<std::int64_t>();
        if (c.contains("rating_probs")) cs.rating_probs = probs_from_json(c.at("rating_probs"));
        cs.frac_singletons = c.value("frac_singletons", 1.0);
        cs.frac_first_timers = c.value("frac_first_timers", 0.0);
        cs.frac_aged = c.value("frac_aged", 0.0);
        cs.recurrence_period = c.value("recurrence_period", std::int64_t{0});
        if (c.contains("arrival")) {
            const auto a = c.at("arrival").get<std::string>();
            if (a == "uniform") cs.arrival = ArrivalPattern::uniform;
            else if (a == "bursty_robotic") cs.arrival = ArrivalPattern::bursty_robotic;
            else throw ConfigError("campaign: unknown arrival pattern '" + a + "'");
        }
        s.campaigns.push_back(std::move(cs));
    }
    s.validate();
    return s;
}

ScenarioSpec load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str());
}

std::string scenario_to_json(const ScenarioSpec& s) {
    nlohmann::json j;
    j["product_count"] = s.product_count;
    j["window_count"] = s.window_count;
    j["organic_rate"] = s.organic_rate;
    j["organic_rating_probs"] = probs_to_json(s.organic_rating_probs);
    j["user_pool_size"] = s.user_pool_size;
    j["activity"] = s.activity == PoolActivity::uniform ? "uniform" : "zipf";
    j["zipf_exponent"] = s.zipf_exponent;
    j["delta_t"] = s.delta_t;
    j["base_time"] = s.base_time;
    j["deterministic_organic"] = s.deterministic_organic;
    auto overrides = nlohmann::json::array();
    for (const auto& ov : s.overrides) {
        overrides.push_back({{"product_id", ov.product_id},
                             {"rate", ov.rate},
                             {"probs_start", probs_to_json(ov.probs_start)},
                             {"probs_end", probs_to_json(ov.probs_end)},
                             {"drift_start_window", ov.drift_start_window},
                             {"drift_end_window", ov.drift_end_window}});
    }
    j["overrides"] = std::move(overrides);
    auto campaigns = nlohmann::json::array();
    for (const auto& c : s.campaigns) {
        campaigns.push_back(
            {{"target_product", c.target_product},
             {"start_window", c.start_window},
             {"duration_windows", c.duration_windows},
             {"reviews_per_window", c.reviews_per_window},
             {"rating_probs", probs_to_json(c.rating_probs)},
             {"frac_singletons", c.frac_singletons},
             {"frac_first_timers", c.frac_first_timers},
             {"frac_aged", c.frac_aged},
             {"recurrence_period", c.recurrence_period},
             {"arrival", c.arrival == ArrivalPattern::uniform ? "uniform" : "bursty_robotic"}});
    }
    j["campaigns"] = std::move(campaigns);
    return j.dump(2);
}

void write_truth_csv(const std::string& path, const std::vector<GroundTruthCell>& truth) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open truth file '" + path + "' for writing");
    out << "product_id,window,campaign_id\n";
    for (const auto& cell : truth) {
        out << csv_escape(cell.product_id) << ',' << cell.window << ','
            << csv_escape(cell.campaign_id) << '\n';
    }
}

std::vector<GroundTruthCell> read_truth_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open truth file '" + path + "'");
    std::vector<GroundTruthCell> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("product_id,", 0) == 0) continue;
        }
        auto fields = split_csv_fields(line);
        if (fields.size() < 3) throw ConfigError("truth CSV: expected 3 columns");
        out.push_back({fields[0], std::stoll(fields[1]), fields[2]});
    }
    return out;
}

EvalMetrics evaluate(const std::vector<DetectedCell>& detected,
                     const std::vector<GroundTruthCell>& truth, std::int64_t tolerance) {
    EvalMetrics m;
    m.detected_cells = static_cast<std::int64_t>(detected.size());
    m.truth_cells = static_cast<std::int64_t>(truth.size());

    auto near = [&](const DetectedCell& d, const GroundTruthCell& t) {
        return d.product_id == t.product_id &&
               std::llabs(d.window - t.window) <= tolerance;
    };

    for (const auto& d : detected) {
        for (const auto& t : truth) {
            if (near(d, t)) {
                ++m.matched_detected;
                break;
            }
        }
    }
    for (const auto& t : truth) {
        for (const auto& d : detected) {
            if (near(d, t)) {
                ++m.matched_truth;
                break;
            }
        }
    }
    m.precision = detected.empty()
                      ? 1.0
                      : static_cast<double>(m.matched_detected) / static_cast<double>(detected.size());
    m.recall = truth.empty()
                   ? 1.0
                   : static_cast<double>(m.matched_truth) / static_cast<double>(truth.size());

    // Occurrence latency: first detection within the occurrence's tolerance
    // band, relative to its first window.
    struct OccAgg {
        std::string product;
        std::int64_t start = 0;
        std::int64_t end = 0;
    };
    std::vector<std::pair<std::string, OccAgg>> occs;
    for (const auto& t : truth) {
        auto it = std::find_if(occs.begin(), occs.end(),
                               [&](const auto& kv) { return kv.first == t.campaign_id; });
        if (it == occs.end()) {
            occs.push_back({t.campaign_id, {t.product_id, t.window, t.window}});
        } else {
            it->second.start = std::min(it->second.start, t.window);
            it->second.end = std::max(it->second.end, t.window);
        }
    }
    for (const auto& [id, occ] : occs) {
        OccurrenceResult r;
        r.campaign_id = id;
        r.product_id = occ.product;
        r.start_window = occ.start;
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        for (const auto& d : detected) {
            if (d.product_id != occ.product) continue;
            if (d.window < occ.start - tolerance || d.window > occ.end + tolerance) continue;
            best = std::min(best, d.window);
        }
        if (best != std::numeric_limits<std::int64_t>::max()) {
            r.detected = true;
            r.latency = best - occ.start;
        }
        m.occurrences.push_back(std::move(r));
    }
    return m;
}

std::string metrics_to_json(const EvalMetrics& m) {
    nlohmann::json j;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["detected_cells"] = m.detected_cells;
    j["truth_cells"] = m.truth_cells;
    j["matched_detected"] = m.matched_detected;
    j["matched_truth"] = m.matched_truth;
    auto occs = nlohmann::json::array();
    for (const auto& o : m.occurrences) {
        nlohmann::json jo{{"campaign_id", o.campaign_id},
                          {"product_id", o.product_id},
                          {"start_window", o.start_window},
                          {"detected", o.detected}};
        if (o.detected) jo["latency"] = o.latency;
        occs.push_back(std::move(jo));
    }
    j["occurrences"] = std::move(occs);
    return j.dump(2);
}

std::vector<DetectedCell> read_detected_cells_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open detected-cells file '" + path + "'");
    std::vector<DetectedCell> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("product_id,", 0) == 0) continue;
        auto fields = split_csv_fields(line);
        if (fields.size() < 2) throw ConfigError("detected-cells CSV: expected 2+ columns");
        out.push_back({fields[0], std::stoll(fields[1])});
    }
    return out;
}

}  // namespace spamwatch
