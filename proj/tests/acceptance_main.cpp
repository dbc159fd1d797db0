// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Scenario magnitudes follow the documented case-study
// replicas; thresholds and tolerances are pinned in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spamwatch/ar.hpp"
#include "spamwatch/pipeline.hpp"
#include "spamwatch/signals.hpp"
#include "spamwatch/synth.hpp"
#include "spamwatch/threshold.hpp"

using namespace spamwatch;

namespace {

int g_failures = 0;

void report(int index, const char* name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] criterion %d: %s (%s; %.1fs)\n", pass ? "PASS" : "FAIL", index, name,
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

bool close(double a, double b, double rel) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-9});
    return std::fabs(a - b) <= rel * scale;
}

// ---------------------------------------------------------------- criterion 1

bool check_signal_formulas(std::string& detail) {
    int bad = 0;
    auto expect = [&](bool ok) {
        if (!ok) ++bad;
    };
    constexpr std::int64_t kWeek = 604800;

    // Degenerate concentration window.
    {
        ProductCumulativeState st;
        WindowAccumulator acc;
        for (int i = 0; i < 10; ++i) acc.add(ReviewUnit{"u", "p", 100, 5, {}}, 0);
        const auto sv = close_window(st, acc, WindowUserStats{10, 10}, kWeek);
        expect(close(sv.avg_rating.value(), 5.0, 1e-12));
        expect(sv.review_count == 10 && sv.pos_count == 10 && sv.neg_count == 0);
        expect(close(sv.rating_entropy.value(), 0.0, 1e-12) || sv.rating_entropy.value() == 0.0);
        expect(close(sv.singleton_ratio.value(), 1.0, 1e-12));
        expect(close(sv.first_timer_ratio.value(), 1.0, 1e-12));
        expect(close(sv.youth_score.value(), 1.0, 1e-12));
        expect(sv.gap_entropy.value() == 0.0);
    }
    // Empty window: counts zero, cumulative rating carried, rest absent.
    {
        ProductCumulativeState st;
        WindowAccumulator acc;
        acc.add(ReviewUnit{"u", "p", 5, 4, {}}, 0);
        acc.add(ReviewUnit{"v", "p", 9, 2, {}}, 0);
        close_window(st, acc, WindowUserStats{2, 2}, kWeek);
        WindowAccumulator empty;
        const auto sv = close_window(st, empty, WindowUserStats{}, kWeek);
        expect(sv.review_count == 0 && sv.pos_count == 0 && sv.neg_count == 0);
        expect(close(sv.avg_rating.value(), 3.0, 1e-12));
        expect(!sv.rating_entropy && !sv.singleton_ratio && !sv.first_timer_ratio &&
               !sv.youth_score && !sv.gap_entropy);
    }
    // Uniform ratings reach log2(5).
    {
        ProductCumulativeState st;
        WindowAccumulator acc;
        for (int r = 1; r <= 5; ++r) acc.add(ReviewUnit{"u", "p", r, r, {}}, 0);
        const auto sv = close_window(st, acc, WindowUserStats{}, kWeek);
        expect(close(sv.rating_entropy.value(), std::log2(5.0), 1e-12));
    }
    // Entropy scalar example.
    expect(close(rating_entropy({3, 0, 0, 0, 1}), 0.8112781244591328, 1e-9));
    expect(rating_entropy({4, 0, 0, 0, 0}) == 0.0);
    // Youth-score values.
    {
        std::vector<std::int64_t> zero{0, 0};
        expect(close(youth_score(zero, kWeek), 1.0, 1e-12));
        std::vector<std::int64_t> one{kWeek};
        expect(close(youth_score(one, kWeek), 0.5378828427399902, 1e-9));
        std::vector<std::int64_t> old(3, 600 * kWeek);
        expect(youth_score(old, kWeek) < 1e-9);
    }
    // Gap-histogram layout: 30-day window -> 6 bins; entropy bound log2(6).
    expect(gap_bin_count(30 * 86400) == 6);
    expect(gap_bin_count(kWeek) == 4);
    {
        const std::int64_t day = 86400;
        std::vector<std::int64_t> ts{0, 0, day, 3 * day, 8 * day};
        expect(close(gap_entropy(ts, kWeek), 2.0, 1e-12));
        std::vector<std::int64_t> even{0, 1000, 2000, 3000};
        expect(gap_entropy(even, kWeek) == 0.0);
    }

    // Fuzz: 10,000 random windows, zero range violations.
    std::mt19937_64 rng(20240811);
    int violations = 0;
    const double max_g = std::log2(static_cast<double>(gap_bin_count(kWeek)));
    for (int trial = 0; trial < 10000; ++trial) {
        ProductCumulativeState st;
        WindowAccumulator acc;
        const int n = static_cast<int>(rng() % 14);
        std::vector<std::int64_t> ts;
        for (int i = 0; i < n; ++i) ts.push_back(static_cast<std::int64_t>(rng() % kWeek));
        std::sort(ts.begin(), ts.end());
        for (int i = 0; i < n; ++i) {
            acc.add(ReviewUnit{"u", "p", ts[static_cast<std::size_t>(i)],
                               static_cast<int>(1 + rng() % 5), {}},
                    static_cast<std::int64_t>(rng() % (50 * kWeek)));
        }
        const std::int64_t singles = n == 0 ? 0 : static_cast<std::int64_t>(rng() % (n + 1));
        const std::int64_t firsts =
            n == 0 ? 0 : singles + static_cast<std::int64_t>(rng() % (n - singles + 1));
        const auto sv = close_window(st, acc, WindowUserStats{singles, firsts}, kWeek);
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        bool ok = sv.pos_count + sv.neg_count <= sv.review_count;
        if (n == 0) {
            ok = ok && !sv.avg_rating && !sv.rating_entropy && !sv.singleton_ratio &&
                 !sv.first_timer_ratio && !sv.youth_score && !sv.gap_entropy;
        } else {
            ok = ok && sv.avg_rating.value() >= 1.0 && sv.avg_rating.value() <= 5.0;
            ok = ok && sv.rating_entropy.value() >= 0.0 &&
                 sv.rating_entropy.value() <= std::log2(5.0) + 1e-12;
            ok = ok && in01(sv.singleton_ratio.value()) && in01(sv.first_timer_ratio.value()) &&
                 in01(sv.youth_score.value());
            if (n >= 2) {
                ok = ok && sv.gap_entropy.value() >= 0.0 &&
                     sv.gap_entropy.value() <= max_g + 1e-12;
            } else {
                ok = ok && !sv.gap_entropy;
            }
        }
        if (!ok) ++violations;
    }
    expect(violations == 0);

    detail = "example values exact, " + std::to_string(violations) +
             " range violations over 10000 fuzzed windows, " + std::to_string(bad) +
             " failed checks";
    return bad == 0;
}

// ---------------------------------------------------------------- criterion 2

bool check_sdar_oracle(std::string& detail) {
    // Batch oracle: plain mean, biased autocovariances, dense Yule-Walker.
    auto batch_mean = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto batch_cov = [&](const std::vector<double>& v, int k) {
        const double m = batch_mean(v);
        std::vector<double> c(static_cast<std::size_t>(k) + 1, 0.0);
        for (int j = 0; j <= k; ++j) {
            double s = 0;
            for (std::size_t i = 0; i + static_cast<std::size_t>(j) < v.size(); ++i) {
                s += (v[i] - m) * (v[i + static_cast<std::size_t>(j)] - m);
            }
            c[static_cast<std::size_t>(j)] = s / static_cast<double>(v.size());
        }
        return c;
    };
    auto dense_yw = [](const std::vector<double>& c, int k) {
        std::vector<std::vector<double>> a(static_cast<std::size_t>(k),
                                           std::vector<double>(static_cast<std::size_t>(k)));
        std::vector<double> b(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            b[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i + 1)];
            for (int j = 0; j < k; ++j) {
                a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    c[static_cast<std::size_t>(std::abs(i - j))];
            }
        }
        // forward elimination + back substitution
        for (std::size_t col = 0; col < static_cast<std::size_t>(k); ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < static_cast<std::size_t>(k); ++r) {
                if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
            }
            std::swap(a[piv], a[col]);
            std::swap(b[piv], b[col]);
            for (std::size_t r = col + 1; r < static_cast<std::size_t>(k); ++r) {
                const double f = a[r][col] / a[col][col];
                for (std::size_t cc = col; cc < static_cast<std::size_t>(k); ++cc) {
                    a[r][cc] -= f * a[col][cc];
                }
                b[r] -= f * b[col];
            }
        }
        std::vector<double> x(static_cast<std::size_t>(k), 0.0);
        for (std::size_t i = static_cast<std::size_t>(k); i-- > 0;) {
            double acc = b[i];
            for (std::size_t cc = i + 1; cc < static_cast<std::size_t>(k); ++cc) {
                acc -= a[i][cc] * x[cc];
            }
            x[i] = acc / a[i][i];
        }
        return x;
    };

    const int k = 4;
    int failures = 0;
    double worst = 0.0;
    for (int stream = 0; stream < 100; ++stream) {
        std::mt19937 rng(9000 + static_cast<unsigned>(stream));
        std::normal_distribution<double> noise(0.0, 1.0);
        std::uniform_real_distribution<double> coef(-0.35, 0.35);
        std::vector<double> phi(4);
        for (auto& c : phi) c = coef(rng);
        std::vector<double> v;
        for (int i = 0; i < 700; ++i) {
            double x = noise(rng);
            for (int j = 0; j < 4 && j < i; ++j) {
                x += phi[static_cast<std::size_t>(j)] * v[v.size() - 1 - static_cast<std::size_t>(j)];
            }
            v.push_back(x);
        }
        v.erase(v.begin(), v.begin() + 200);

        SdarModel model(k, 0.0);
        for (double x : v) model.step(x);

        auto rel = [&](double got, double want) {
            const double scale = std::max({std::fabs(got), std::fabs(want), 1e-6});
            const double r = std::fabs(got - want) / scale;
            worst = std::max(worst, r);
            return r;
        };
        bool ok = rel(model.mean(), batch_mean(v)) <= 1e-6;
        const auto want_c = batch_cov(v, k);
        const auto got_c = model.autocovariances();
        for (int j = 0; j <= k; ++j) {
            ok = ok && rel(got_c[static_cast<std::size_t>(j)],
                           want_c[static_cast<std::size_t>(j)]) <= 1e-6;
        }
        const auto want_w = dense_yw(want_c, k);
        for (int j = 0; j < k; ++j) {
            ok = ok && rel(model.coefficients()[static_cast<std::size_t>(j)],
                           want_w[static_cast<std::size_t>(j)]) <= 1e-6;
        }
        if (!ok) ++failures;
    }
    std::ostringstream d;
    d << failures << "/100 streams off, worst relative deviation " << worst;
    detail = d.str();
    return failures == 0;
}

// ---------------------------------------------------------------- criterion 3

bool check_cantelli_guarantee(std::string& detail) {
    const double eta = 0.04;
    std::int64_t decisions = 0, flags = 0;
    std::mt19937 rng(5150);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::student_t_distribution<double> t3(3.0);
    for (int stream = 0; stream < 1000; ++stream) {
        ScoreDistribution dist;
        const int family = stream % 3;
        for (int i = 0; i < 250; ++i) {
            double s = 0.0;
            if (family == 0) {
                const double z = gauss(rng);
                s = z * z;  // squared-error style, heavy right tail
            } else if (family == 1) {
                s = uni(rng);
            } else {
                s = std::fabs(t3(rng));  // heavy-tailed
            }
            if (dist.count() >= 30) {
                ++decisions;
                const auto delta = cantelli_threshold(dist, eta);
                if (delta && s > *delta) ++flags;
            }
            dist.add(s);
        }
    }
    const double rate = static_cast<double>(flags) / static_cast<double>(decisions);
    std::ostringstream d;
    d << "flagged fraction " << rate << " vs budget " << 1.5 * eta << " over " << decisions
      << " decisions";
    detail = d.str();
    return rate <= 1.5 * eta;
}

// ---------------------------------------------------------------- criterion 4

ScenarioSpec case1_scenario() {
    ScenarioSpec s;
    s.product_count = 501;
    s.window_count = 196;
    s.organic_rate = 3.0;
    s.organic_rating_probs = {0.10, 0.15, 0.20, 0.25, 0.30};
    s.user_pool_size = 40000;
    s.delta_t = 604800;

    ProductOverride target;
    target.product_id = s.product_id(0);
    target.rate = 8.0;
    target.probs_start = {0.05, 0.10, 0.15, 0.25, 0.45};  // mean 3.95
    target.probs_end = {0.35, 0.28, 0.17, 0.12, 0.08};    // mean 2.30
    target.drift_start_window = 20;
    target.drift_end_window = 160;
    s.overrides.push_back(target);

    CampaignSpec c;
    c.target_product = target.product_id;
    c.start_window = 168;
    c.duration_windows = 1;
    c.reviews_per_window = 120;
    c.rating_probs = {0, 0, 0, 0.25, 0.75};
    c.frac_singletons = 1.0;
    c.recurrence_period = 7;
    c.arrival = ArrivalPattern::bursty_robotic;
    s.campaigns.push_back(c);
    return s;
}

bool check_case1(std::string& detail) {
    const auto scenario = case1_scenario();
    const auto g = generate(scenario, 168);
    const auto target = scenario.overrides[0].product_id;
    const std::vector<std::int64_t> campaigns{168, 175, 182, 189};

    PipelineConfig count_cfg;
    count_cfg.origin = 0;
    count_cfg.mode = DetectorMode::local_ar;
    count_cfg.detector.leads = {LeadKind::pos_count_ar};
    Pipeline count_run(count_cfg);
    feed_all(count_run, g.reviews);
    count_run.finish();

    int count_hits = 0;
    for (std::int64_t c : campaigns) {
        bool hit = false;
        for (const auto& rec : count_run.anomaly_records()) {
            if (rec.product_id == target && rec.signal == SignalId::pos_count &&
                std::llabs(rec.window - c) <= 1) {
                hit = true;
            }
        }
        if (hit) ++count_hits;
    }

    int top1 = 0;
    for (const auto& rw : count_run.rankings()) {
        for (std::int64_t c : campaigns) {
            if (rw.window == c && !rw.ordered.empty() &&
                rw.ordered.front().product_id == target) {
                ++top1;
            }
        }
    }

    PipelineConfig cusum_cfg;
    cusum_cfg.origin = 0;
    cusum_cfg.mode = DetectorMode::local_ar;
    cusum_cfg.detector.leads = {LeadKind::avg_rating_cusum};
    Pipeline cusum_run(cusum_cfg);
    feed_all(cusum_run, g.reviews);
    cusum_run.finish();

    int cusum_hits = 0;
    for (std::int64_t c : campaigns) {
        bool hit = false;
        for (const auto& rec : cusum_run.anomaly_records()) {
            if (rec.product_id == target && rec.detector == DetectorKind::cusum &&
                std::llabs(rec.window - c) <= 1) {
                hit = true;
            }
        }
        if (hit) ++cusum_hits;
    }

    std::ostringstream d;
    d << "count lead " << count_hits << "/4 campaigns, cusum lead " << cusum_hits
      << "/4, target top-1 in " << top1 << "/4 campaign windows among "
      << scenario.product_count << " products";
    detail = d.str();
    return count_hits == 4 && cusum_hits >= 2 && top1 == 4;
}

// ---------------------------------------------------------------- criterion 5/6/7

struct SweepOutcome {
    double precision = 0.0;
    double recall_strong = 0.0;  // campaigns >= 5x baseline only
    double jaccard = 0.0;
    double global_stage_seconds = 0.0;
    double local_stage_seconds = 0.0;
    std::int64_t strong_truth = 0;
    std::int64_t detected_total = 0;
};

ScenarioSpec sweep_scenario(int index, double magnitude, double singleton_frac) {
    ScenarioSpec s;
    s.product_count = 100;
    s.window_count = 120;
    s.organic_rate = 4.0;
    s.organic_rating_probs = {0.10, 0.15, 0.20, 0.25, 0.30};
    s.user_pool_size = 8000;
    s.delta_t = 604800;

    auto add_campaign = [&](std::int64_t product, std::int64_t start, std::int64_t period) {
        CampaignSpec c;
        c.target_product = s.product_id(product);
        c.start_window = start;
        c.duration_windows = 1;
        c.reviews_per_window =
            std::max<std::int64_t>(2, std::llround(magnitude * s.organic_rate));
        c.rating_probs = {0, 0, 0, 0.2, 0.8};
        c.frac_singletons = singleton_frac;
        c.frac_first_timers = (1.0 - singleton_frac) * 0.6;
        c.frac_aged = 1.0 - c.frac_singletons - c.frac_first_timers;
        c.recurrence_period = period;
        c.arrival = index % 2 == 0 ? ArrivalPattern::bursty_robotic : ArrivalPattern::uniform;
        s.campaigns.push_back(c);
    };
    add_campaign(1, 60, 0);
    add_campaign(2, 85, 25);  // two occurrences: 85, 110
    return s;
}

SweepOutcome run_sweep() {
    const double magnitudes[] = {2.0, 3.5, 5.0, 8.0, 12.0, 16.0, 20.0};
    const double singleton_fracs[] = {0.2, 0.4, 0.6, 0.8, 1.0};

    std::int64_t matched_detected = 0, detected_total = 0;
    std::int64_t strong_truth = 0, strong_matched = 0;
    std::set<std::string> local_cells, global_cells;
    SweepOutcome out;

    for (int scenario_idx = 0; scenario_idx < 50; ++scenario_idx) {
        const double magnitude = magnitudes[scenario_idx % 7];
        const double singleton_frac = singleton_fracs[scenario_idx % 5];
        const auto scenario = sweep_scenario(scenario_idx, magnitude, singleton_frac);
        const auto g = generate(scenario, 1000 + static_cast<std::uint64_t>(scenario_idx));

        std::vector<DetectedCell> local_detected;
        for (auto mode : {DetectorMode::local_ar, DetectorMode::global_ar}) {
            PipelineConfig cfg;
            cfg.origin = 0;
            cfg.mode = mode;
            cfg.detector.leads = {LeadKind::pos_count_ar};
            Pipeline p(cfg);
            feed_all(p, g.reviews);
            p.finish();

            auto& cells = mode == DetectorMode::local_ar ? local_cells : global_cells;
            for (const auto& rec : p.anomaly_records()) {
                if (rec.signal == SignalId::pos_count) continue;  // lead labels excluded
                cells.insert(std::to_string(scenario_idx) + "/" + rec.product_id + "/" +
                             std::to_string(rec.window));
            }
            if (mode == DetectorMode::local_ar) {
                local_detected = p.detected_cells();
                out.local_stage_seconds += p.counters().support_stage_seconds;
            } else {
                out.global_stage_seconds += p.counters().support_stage_seconds;
            }
        }

        const auto metrics = evaluate(local_detected, g.truth, 1);
        matched_detected += metrics.matched_detected;
        detected_total += metrics.detected_cells;

        // Strong campaigns: >= 5x organic baseline.
        if (magnitude >= 5.0) {
            for (const auto& cell : g.truth) {
                ++strong_truth;
                for (const auto& d : local_detected) {
                    if (d.product_id == cell.product_id &&
                        std::llabs(d.window - cell.window) <= 1) {
                        ++strong_matched;
                        break;
                    }
                }
            }
        }
    }

    out.precision = detected_total == 0
                        ? 1.0
                        : static_cast<double>(matched_detected) / static_cast<double>(detected_total);
    out.recall_strong =
        strong_truth == 0 ? 1.0
                          : static_cast<double>(strong_matched) / static_cast<double>(strong_truth);
    out.strong_truth = strong_truth;
    out.detected_total = detected_total;

    std::set<std::string> both;
    for (const auto& c : local_cells) {
        if (global_cells.count(c)) both.insert(c);
    }
    std::set<std::string> either = local_cells;
    either.insert(global_cells.begin(), global_cells.end());
    out.jaccard = either.empty()
                      ? 1.0
                      : static_cast<double>(both.size()) / static_cast<double>(either.size());
    return out;
}

bool check_sublinearity(const SweepOutcome& sweep, std::string& detail) {
    // Deterministic organics: zero stray alarms, so the alarm count is
    // pinned while the organic tail doubles.
    auto make = [](std::int64_t windows) {
        ScenarioSpec s;
        s.product_count = 50;
        s.window_count = windows;
        s.organic_rate = 5.0;
        s.organic_rating_probs = {0, 0, 0, 1.0, 0};
        s.user_pool_size = 1000;
        s.deterministic_organic = true;
        s.delta_t = 604800;
        CampaignSpec c;
        c.target_product = s.product_id(7);
        c.start_window = 40;
        c.reviews_per_window = 50;
        c.rating_probs = {0, 0, 0, 0, 1.0};
        c.arrival = ArrivalPattern::bursty_robotic;
        s.campaigns.push_back(c);
        return s;
    };

    auto run = [](const ScenarioSpec& s, DetectorMode mode) {
        PipelineConfig cfg;
        cfg.origin = 0;
        cfg.mode = mode;
        cfg.detector.leads = {LeadKind::pos_count_ar};
        Pipeline p(cfg);
        const auto g = generate(s, 7);
        feed_all(p, g.reviews);
        p.finish();
        return p.counters();
    };

    const auto base = make(60);
    const auto doubled = make(120);

    const auto local_a = run(base, DetectorMode::local_ar);
    const auto local_b = run(doubled, DetectorMode::local_ar);
    const auto global_a = run(base, DetectorMode::global_ar);
    const auto global_b = run(doubled, DetectorMode::global_ar);

    const bool alarms_fixed = local_a.lead_alarms == local_b.lead_alarms &&
                              local_a.lead_alarms >= 1;
    const bool local_flat = local_a.local_ar_fits == local_b.local_ar_fits;
    const bool global_doubles =
        global_b.support_model_updates == 2 * global_a.support_model_updates;
    const double speedup = sweep.local_stage_seconds > 0.0
                               ? sweep.global_stage_seconds / sweep.local_stage_seconds
                               : 0.0;

    std::ostringstream d;
    d << "alarms " << local_a.lead_alarms << "==" << local_b.lead_alarms << ", local fits "
      << local_a.local_ar_fits << "==" << local_b.local_ar_fits << ", continuous updates "
      << global_a.support_model_updates << "->" << global_b.support_model_updates
      << ", support-stage speedup x" << speedup;
    detail = d.str();
    return alarms_fixed && local_flat && global_doubles && speedup >= 3.0;
}

// ---------------------------------------------------------------- criterion 8

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

bool file_equal(const std::string& a, const std::string& b) {
    return read_lines(a) == read_lines(b);
}

bool file_is_prefix(const std::string& prefix_path, const std::string& full_path) {
    const auto p = read_lines(prefix_path);
    const auto f = read_lines(full_path);
    if (p.size() > f.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] != f[i]) return false;
    }
    return true;
}

// Compare only rows whose given integer column is <= limit (CSV, after the
// comment and header rows).
bool rows_equal_upto(const std::string& a_path, const std::string& b_path, int column,
                     std::int64_t limit) {
    auto filter = [&](const std::string& path) {
        std::vector<std::string> rows;
        for (const auto& line : read_lines(path)) {
            if (line.empty() || line[0] == '#' || line.find("product_id") == 0 ||
                line.find("window") == 0) {
                continue;
            }
            std::stringstream ss(line);
            std::string field;
            for (int c = 0; c <= column; ++c) std::getline(ss, field, ',');
            if (std::stoll(field) <= limit) rows.push_back(line);
        }
        return rows;
    };
    return filter(a_path) == filter(b_path);
}

bool check_determinism(std::string& detail) {
    ScenarioSpec s;
    s.product_count = 40;
    s.window_count = 60;
    s.organic_rate = 4.0;
    s.organic_rating_probs = {0.1, 0.15, 0.2, 0.25, 0.3};
    s.user_pool_size = 2000;
    CampaignSpec c;
    c.target_product = s.product_id(5);
    c.start_window = 45;
    c.reviews_per_window = 60;
    c.rating_probs = {0, 0, 0, 0.2, 0.8};
    c.arrival = ArrivalPattern::bursty_robotic;
    s.campaigns.push_back(c);
    const auto g = generate(s, 4242);
    const auto g2 = generate(s, 4242);

    // Same seed, byte-identical stream.
    bool same_stream = g.reviews.size() == g2.reviews.size();
    for (std::size_t i = 0; same_stream && i < g.reviews.size(); ++i) {
        same_stream = g.reviews[i] == g2.reviews[i];
    }

    auto run_to = [&](const std::string& dir, std::int64_t max_window) {
        std::filesystem::remove_all(dir);
        PipelineConfig cfg;
        cfg.origin = 0;
        cfg.mode = DetectorMode::local_ar;
        cfg.detector.leads = {LeadKind::pos_count_ar};
        cfg.out_dir = dir;
        Pipeline p(cfg);
        for (const auto& r : g.reviews) {
            if (r.timestamp / s.delta_t <= max_window) p.feed(r);
        }
        p.finish();
    };

    const std::string run1 = "/tmp/spamwatch_acceptance_run1";
    const std::string run2 = "/tmp/spamwatch_acceptance_run2";
    const std::string runp = "/tmp/spamwatch_acceptance_prefix";
    run_to(run1, 1000);
    run_to(run2, 1000);
    const std::int64_t cut = 50;
    run_to(runp, cut);

    bool rerun_identical = true;
    for (const char* name :
         {"signals.csv", "scores.csv", "anomalies.jsonl", "ranking.csv",
          "ranking_summary.jsonl", "detected_cells.csv", "daily_counts.csv",
          "run_summary.json"}) {
        rerun_identical =
            rerun_identical && file_equal(run1 + "/" + name, run2 + "/" + name);
    }

    bool prefix_ok = true;
    for (const char* name : {"signals.csv", "anomalies.jsonl", "ranking.csv",
                             "ranking_summary.jsonl", "detected_cells.csv"}) {
        prefix_ok = prefix_ok && file_is_prefix(runp + "/" + name, run1 + "/" + name);
    }
    // The delayed score flush and the alarm-context export finalize a few
    // windows behind the barrier; compare their stable regions.
    prefix_ok = prefix_ok && rows_equal_upto(runp + "/scores.csv", run1 + "/scores.csv",
                                             1, cut - 5);
    prefix_ok = prefix_ok && rows_equal_upto(runp + "/daily_counts.csv",
                                             run1 + "/daily_counts.csv", 1, cut - 1);

    std::ostringstream d;
    d << (same_stream ? "seeded stream identical" : "seeded stream DIFFERS") << ", rerun "
      << (rerun_identical ? "byte-identical" : "DIFFERS") << ", prefix "
      << (prefix_ok ? "reproduced" : "DIFFERS");
    detail = d.str();
    return same_stream && rerun_identical && prefix_ok;
}

}  // namespace

int main() {
    {
        Timer t;
        std::string detail;
        const bool ok = check_signal_formulas(detail);
        report(1, "signal formula suite", ok, detail, t.seconds());
    }
    {
        Timer t;
        std::string detail;
        const bool ok = check_sdar_oracle(detail);
        report(2, "SDAR equals batch statistics at r=0", ok, detail, t.seconds());
    }
    {
        Timer t;
        std::string detail;
        const bool ok = check_cantelli_guarantee(detail);
        report(3, "Cantelli flag-rate guarantee", ok, detail, t.seconds());
    }
    {
        Timer t;
        std::string detail;
        const bool ok = check_case1(detail);
        report(4, "recurring-campaign case replica", ok, detail, t.seconds());
    }
    SweepOutcome sweep;
    {
        Timer t;
        sweep = run_sweep();
        std::ostringstream d5;
        d5 << "recall " << sweep.recall_strong << " on " << sweep.strong_truth
           << " strong campaign cells, precision " << sweep.precision << " on "
           << sweep.detected_total << " detected cells";
        const bool ok5 = sweep.recall_strong >= 0.9 && sweep.precision >= 0.8;
        report(5, "detection quality sweep (50 scenarios)", ok5, d5.str(), t.seconds());

        std::ostringstream d6;
        d6 << "labeled-cell Jaccard " << sweep.jaccard;
        report(6, "continuous/local agreement", sweep.jaccard >= 0.8, d6.str(), 0.0);
    }
    {
        Timer t;
        std::string detail;
        const bool ok = check_sublinearity(sweep, detail);
        report(7, "local analysis is sublinear", ok, detail, t.seconds());
    }
    {
        Timer t;
        std::string detail;
        const bool ok = check_determinism(detail);
        report(8, "causality and determinism", ok, detail, t.seconds());
    }
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
