#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "spamwatch/errors.hpp"
#include "spamwatch/pipeline.hpp"

namespace spamwatch {

namespace {

nlohmann::json doubles_with_nan(const std::vector<double>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : v) {
        if (std::isnan(x)) arr.push_back(nullptr);
        else arr.push_back(x);
    }
    return arr;
}

std::vector<double> doubles_with_nan(const nlohmann::json& arr) {
    std::vector<double> v;
    v.reserve(arr.size());
    for (const auto& x : arr) {
        v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
    }
    return v;
}

nlohmann::json sdar_to_json(const SdarModel& m) {
    const auto s = m.state();
    return nlohmann::json{{"order", s.order},     {"discount", s.discount},
                          {"n", s.n},             {"recent", s.recent},
                          {"mu", s.mu},           {"cov", s.cov},
                          {"sum", s.sum},         {"lag_products", s.lag_products},
                          {"head", s.head},       {"sigma", s.sigma},
                          {"omega", s.omega}};
}

SdarModel sdar_from_json(const nlohmann::json& j) {
    SdarModel::State s;
    s.order = j.at("order").get<int>();
    s.discount = j.at("discount").get<double>();
    s.n = j.at("n").get<std::int64_t>();
    s.recent = j.at("recent").get<std::vector<double>>();
    s.mu = j.at("mu").get<double>();
    s.cov = j.at("cov").get<std::vector<double>>();
    s.sum = j.at("sum").get<double>();
    s.lag_products = j.at("lag_products").get<std::vector<double>>();
    s.head = j.at("head").get<std::vector<double>>();
    s.sigma = j.at("sigma").get<double>();
    s.omega = j.at("omega").get<std::vector<double>>();
    return SdarModel::from_state(s);
}

nlohmann::json cusum_to_json(const CusumDetector& d) {
    const auto s = d.state();
    return nlohmann::json{{"kappa_factor", s.kappa_factor},
                          {"beta", s.beta},
                          {"g_pos", s.g_pos},
                          {"g_neg", s.g_neg},
                          {"has_prev", s.has_prev},
                          {"prev", s.prev},
                          {"has_ref", s.has_ref},
                          {"ref", s.ref},
                          {"inc", {s.inc_n, s.inc_mean, s.inc_m2}}};
}

CusumDetector cusum_from_json(const nlohmann::json& j) {
    CusumDetector::State s;
    s.kappa_factor = j.at("kappa_factor").get<double>();
    s.beta = j.at("beta").get<double>();
    s.g_pos = j.at("g_pos").get<double>();
    s.g_neg = j.at("g_neg").get<double>();
    s.has_prev = j.at("has_prev").get<bool>();
    s.prev = j.at("prev").get<double>();
    s.has_ref = j.at("has_ref").get<bool>();
    s.ref = j.at("ref").get<double>();
    s.inc_n = j.at("inc")[0].get<std::int64_t>();
    s.inc_mean = j.at("inc")[1].get<double>();
    s.inc_m2 = j.at("inc")[2].get<double>();
    return CusumDetector::from_state(s);
}

nlohmann::json stats_to_json(const RunningStats& s) {
    return nlohmann::json{s.count(), s.mean(), s.raw_m2()};
}

void stats_from_json(const nlohmann::json& j, RunningStats& s) {
    s.restore(j[0].get<std::int64_t>(), j[1].get<double>(), j[2].get<double>());
}

nlohmann::json config_guard(const PipelineConfig& c) {
    nlohmann::json leads = nlohmann::json::array();
    for (auto k : c.detector.leads) leads.push_back(lead_name(k));
    return nlohmann::json{{"delta_t", c.delta_t},
                          {"mode", mode_name(c.mode)},
                          {"leads", std::move(leads)},
                          {"r", c.detector.discount_r},
                          {"k", c.detector.global_order},
                          {"L", c.detector.local_search_window},
                          {"eta", c.detector.eta},
                          {"lag_radius", c.detector.lag_radius},
                          {"kappa_factor", c.detector.cusum_kappa_factor},
                          {"warmup_min_scores", c.detector.warmup_min_scores},
                          {"min_support_labels", c.min_support_labels}};
}

}  // namespace

struct PipelineSnapshotCodec {
    static void save(const Pipeline& p, std::ostream& out) {
        nlohmann::json j;
        j["format"] = "spamwatch-pipeline-state";
        j["version"] = 1;
        j["window"] = p.last_closed_window_;
        j["config_guard"] = config_guard(p.config_);
        j["origin_set"] = p.origin_set_;
        j["origin"] = p.origin_;
        j["scores_flushed_through"] = p.scores_flushed_through_;

        {
            std::ostringstream reg;
            p.registry_.save_snapshot(reg);
            j["registry"] = nlohmann::json::parse(reg.str());
        }

        j["counters"] = nlohmann::json{
            {"reviews", p.counters_.reviews},
            {"windows_closed", p.counters_.windows_closed},
            {"lead_alarms", p.counters_.lead_alarms},
            {"lead_model_updates", p.counters_.lead_model_updates},
            {"support_model_updates", p.counters_.support_model_updates},
            {"local_ar_fits", p.counters_.local_ar_fits},
            {"support_scored_points", p.counters_.support_scored_points},
            {"labels", p.counters_.labels},
            {"skip_warnings", p.counters_.skip_warnings}};

        nlohmann::json sdists = nlohmann::json::array();
        for (const auto& d : p.support_dists_) sdists.push_back(stats_to_json(d.raw()));
        j["support_dists"] = std::move(sdists);
        nlohmann::json ldists = nlohmann::json::array();
        for (const auto& [kind, d] : p.lead_dists_) {
            ldists.push_back({{"kind", lead_name(kind)}, {"stats", stats_to_json(d.raw())}});
        }
        j["lead_dists"] = std::move(ldists);

        nlohmann::json ecdf = nlohmann::json::array();
        for (const auto& store : p.ecdf_) ecdf.push_back(store.sorted_values());
        j["ecdf"] = std::move(ecdf);

        nlohmann::json tally = nlohmann::json::array();
        for (const auto& [key, count] : p.support_label_tally_) {
            tally.push_back({key.first, key.second, count});
        }
        j["support_label_tally"] = std::move(tally);

        nlohmann::json pending = nlohmann::json::array();
        for (const auto& [id, w] : p.pending_alarm_exports_) pending.push_back({id, w});
        j["pending_alarm_exports"] = std::move(pending);

        nlohmann::json products = nlohmann::json::array();
        for (const auto& [id, ps] : p.products_) {
            nlohmann::json jp;
            jp["id"] = id;
            jp["first_window"] = ps.first_window;
            jp["cum_sum"] = ps.cumulative.rating_sum;
            jp["cum_count"] = ps.cumulative.review_count;
            jp["last_alarm"] = ps.last_alarm;
            jp["label_counts"] = ps.label_counts;
            nlohmann::json series = nlohmann::json::array();
            for (const auto& s : ps.series) {
                series.push_back({{"w", s.windows()},
                                  {"v", s.values()},
                                  {"s", doubles_with_nan(s.scores())},
                                  {"l", s.labels()}});
            }
            jp["series"] = std::move(series);
            if (ps.cusum) jp["cusum"] = cusum_to_json(*ps.cusum);
            nlohmann::json leads = nlohmann::json::array();
            for (const auto& [kind, model] : ps.lead_models) {
                leads.push_back({{"kind", lead_name(kind)}, {"model", sdar_to_json(model)}});
            }
            jp["lead_models"] = std::move(leads);
            if (p.config_.mode == DetectorMode::global_ar) {
                nlohmann::json supports = nlohmann::json::array();
                for (const auto& g : ps.global_supports) supports.push_back(sdar_to_json(g.model()));
                jp["global_supports"] = std::move(supports);
            } else {
                nlohmann::json local = nlohmann::json::array();
                for (const auto& l : ps.local_supports) {
                    local.push_back({l.selection_alarm, l.selected_order});
                }
                jp["local_supports"] = std::move(local);
            }
            nlohmann::json daily = nlohmann::json::array();
            for (const auto& [day, counts] : ps.daily_counts) {
                daily.push_back({day, counts[0], counts[1], counts[2], counts[3], counts[4]});
            }
            jp["daily"] = std::move(daily);
            products.push_back(std::move(jp));
        }
        j["products"] = std::move(products);

        out << j.dump() << '\n';
    }

    static Pipeline restore(PipelineConfig config, std::istream& in) {
        // The snapshot file is append-only; the last line is the newest state.
        std::string line, last;
        while (std::getline(in, line)) {
            if (!line.empty()) last = line;
        }
        if (last.empty()) throw ConfigError("snapshot stream is empty");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(last);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("invalid pipeline snapshot: ") + e.what());
        }
        if (j.value("format", "") != "spamwatch-pipeline-state" || j.value("version", 0) != 1) {
            throw ConfigError("not a pipeline snapshot (or unsupported version)");
        }

        Pipeline p(std::move(config));
        if (config_guard(p.config_) != j.at("config_guard")) {
            throw ConfigError("snapshot was produced under a different configuration");
        }

        p.last_closed_window_ = j.at("window").get<std::int64_t>();
        p.resume_through_ = p.last_closed_window_;
        p.current_window_ = p.last_closed_window_ + 1;
        p.origin_set_ = j.at("origin_set").get<bool>();
        p.origin_ = j.at("origin").get<std::int64_t>();
        p.scores_flushed_through_ = j.at("scores_flushed_through").get<std::int64_t>();

        {
            std::istringstream reg(j.at("registry").dump());
            p.registry_ = UserRegistry::load_snapshot(reg);
        }

        const auto& c = j.at("counters");
        p.counters_.reviews = c.at("reviews").get<std::uint64_t>();
        p.counters_.windows_closed = c.at("windows_closed").get<std::uint64_t>();
        p.counters_.lead_alarms = c.at("lead_alarms").get<std::uint64_t>();
        p.counters_.lead_model_updates = c.at("lead_model_updates").get<std::uint64_t>();
        p.counters_.support_model_updates = c.at("support_model_updates").get<std::uint64_t>();
        p.counters_.local_ar_fits = c.at("local_ar_fits").get<std::uint64_t>();
        p.counters_.support_scored_points = c.at("support_scored_points").get<std::uint64_t>();
        p.counters_.labels = c.at("labels").get<std::uint64_t>();
        p.counters_.skip_warnings = c.at("skip_warnings").get<std::uint64_t>();

        for (int s = 0; s < kSignalCount; ++s) {
            stats_from_json(j.at("support_dists")[static_cast<std::size_t>(s)],
                            p.support_dists_[static_cast<std::size_t>(s)].raw());
        }
        for (const auto& ld : j.at("lead_dists")) {
            const LeadKind kind = lead_from_name(ld.at("kind").get<std::string>());
            for (auto& [dk, dist] : p.lead_dists_) {
                if (dk == kind) stats_from_json(ld.at("stats"), dist.raw());
            }
        }
        for (int g = 0; g < 4; ++g) {
            p.ecdf_[static_cast<std::size_t>(g)].restore(
                j.at("ecdf")[static_cast<std::size_t>(g)].get<std::vector<double>>());
        }
        for (const auto& t : j.at("support_label_tally")) {
            p.support_label_tally_[{t[0].get<std::string>(), t[1].get<std::int64_t>()}] =
                t[2].get<int>();
        }
        for (const auto& pe : j.at("pending_alarm_exports")) {
            p.pending_alarm_exports_.emplace_back(pe[0].get<std::string>(),
                                                  pe[1].get<std::int64_t>());
        }

        for (const auto& jp : j.at("products")) {
            const auto id = jp.at("id").get<std::string>();
            auto [it, _] = p.products_.try_emplace(id, p.config_.detector);
            ProductState& ps = it->second;
            ps.first_window = jp.at("first_window").get<std::int64_t>();
            ps.cumulative.rating_sum = jp.at("cum_sum").get<double>();
            ps.cumulative.review_count = jp.at("cum_count").get<std::int64_t>();
            ps.last_alarm = jp.at("last_alarm").get<std::int64_t>();
            const auto& lc = jp.at("label_counts");
            for (int s = 0; s < kSignalCount; ++s) {
                ps.label_counts[static_cast<std::size_t>(s)] =
                    lc[static_cast<std::size_t>(s)].get<std::int64_t>();
            }
            for (int s = 0; s < kSignalCount; ++s) {
                const auto& js = jp.at("series")[static_cast<std::size_t>(s)];
                ps.series[static_cast<std::size_t>(s)].restore(
                    js.at("w").get<std::vector<std::int64_t>>(),
                    js.at("v").get<std::vector<double>>(),
                    doubles_with_nan(js.at("s")),
                    js.at("l").get<std::vector<std::uint8_t>>());
            }
            if (jp.contains("cusum")) ps.cusum = cusum_from_json(jp.at("cusum"));
            for (const auto& lm : jp.at("lead_models")) {
                const LeadKind kind = lead_from_name(lm.at("kind").get<std::string>());
                for (auto& [k, model] : ps.lead_models) {
                    if (k == kind) model = sdar_from_json(lm.at("model"));
                }
            }
            if (jp.contains("global_supports")) {
                const auto& gs = jp.at("global_supports");
                for (int s = 0; s < kSignalCount; ++s) {
                    ps.global_supports[static_cast<std::size_t>(s)].model() =
                        sdar_from_json(gs[static_cast<std::size_t>(s)]);
                }
            }
            if (jp.contains("local_supports")) {
                const auto& ls = jp.at("local_supports");
                for (int s = 0; s < kSignalCount; ++s) {
                    ps.local_supports[static_cast<std::size_t>(s)].selection_alarm =
                        ls[static_cast<std::size_t>(s)][0].get<std::int64_t>();
                    ps.local_supports[static_cast<std::size_t>(s)].selected_order =
                        ls[static_cast<std::size_t>(s)][1].get<int>();
                }
            }
            for (const auto& d : jp.at("daily")) {
                auto& counts = ps.daily_counts[d[0].get<std::int64_t>()];
                for (int r = 0; r < 5; ++r) {
                    counts[static_cast<std::size_t>(r)] = d[static_cast<std::size_t>(r + 1)].get<std::int64_t>();
                }
            }
        }
        return p;
    }
};

void Pipeline::save_state(std::ostream& out) const { PipelineSnapshotCodec::save(*this, out); }

Pipeline Pipeline::resume(PipelineConfig config, std::istream& snapshot) {
    return PipelineSnapshotCodec::restore(std::move(config), snapshot);
}

}  // namespace spamwatch
