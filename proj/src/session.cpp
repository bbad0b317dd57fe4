#include "vexad/session.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vexad/errors.hpp"

namespace vexad {

using nlohmann::json;

namespace {

LabeledSet gather(const Dataset& ds, const std::vector<std::vector<int>>& displays,
                  const std::vector<std::vector<int>>& labels) {
    std::vector<int> ids, ys;
    for (std::size_t k = 0; k < displays.size(); ++k) {
        ids.insert(ids.end(), displays[k].begin(), displays[k].end());
        ys.insert(ys.end(), labels[k].begin(), labels[k].end());
    }
    return {feature_matrix(ds, ids), std::move(ys)};
}

}  // namespace

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::awaiting_labels: return "awaiting_labels";
        case Phase::ready: return "ready";
        case Phase::finished: return "finished";
    }
    return "?";
}

std::vector<LabelAnswer> simulated_oracle(const Dataset& ds, std::span<const int> display) {
    std::vector<LabelAnswer> out;
    for (int id : display) out.push_back({id, ds.samples.at(id).label});
    return out;
}

Session::Session(std::shared_ptr<const Dataset> data, SessionConfig cfg) : Session(std::move(data), std::move(cfg), true) {}

Session::Session(std::shared_ptr<const Dataset> data, SessionConfig cfg, bool draw_first)
    : data_(std::move(data)), cfg_(std::move(cfg)), rng_(cfg_.seed) {
    if (!data_) throw std::invalid_argument("session needs a dataset");
    if (cfg_.display_size < 1) throw std::invalid_argument("display_size must be >= 1");
    if (cfg_.budget < 1) throw std::invalid_argument("budget must be >= 1");
    if (!(cfg_.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (cfg_.max_iter < 1) throw std::invalid_argument("maxiter must be >= 1");
    cfg_.weights.validate();
    if (cfg_.dataset.empty()) cfg_.dataset = data_->name;

    split_ = split_half(*data_, cfg_.split_seed);
    const auto pool = static_cast<long long>(split_.train_ids.size());
    if (static_cast<long long>(cfg_.display_size) * cfg_.budget > pool)
        throw std::invalid_argument("display_size * budget = " +
                                    std::to_string(static_cast<long long>(cfg_.display_size) * cfg_.budget) +
                                    " exceeds the training pool of " + std::to_string(pool));

    std::vector<int> all(data_->size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    all_features_ = feature_matrix(*data_, all);
    train_features_ = feature_matrix(*data_, split_.train_ids);
    eval_features_ = feature_matrix(*data_, split_.eval_ids);
    eval_labels_ = labels_of(*data_, split_.eval_ids);

    if (draw_first) displays_.push_back(sample_random(split_.train_ids, {}, cfg_.display_size, rng_.next_u64()));
}

std::span<const int> Session::current_display() const {
    if (phase_ == Phase::finished) return {};
    return displays_.back();
}

std::vector<int> Session::labeled_ids() const {
    std::vector<int> out;
    for (std::size_t k = 0; k < labels_.size(); ++k) out.insert(out.end(), displays_[k].begin(), displays_[k].end());
    return out;
}

std::vector<int> Session::next_display(const Scorer& scorer, const std::vector<int>& labeled, std::uint64_t draw,
                                       SolveReport* report) const {
    const int K = cfg_.display_size;
    switch (cfg_.strategy) {
        case SamplerKind::random: return sample_random(split_.train_ids, labeled, K, draw);
        case SamplerKind::maxmin: return sample_maxmin(all_features_, split_.train_ids, labeled, K);
        case SamplerKind::uncertainty:
            return sample_uncertainty(scorer, all_features_, split_.train_ids, labeled, K);
        case SamplerKind::vexad: {
            // The objective sums over the whole training pool; only the
            // mapping back to real samples excludes labeled ids.
            const SolveResult res =
                solve(train_features_, scorer, cfg_.weights, {K, cfg_.epsilon, cfg_.max_iter, draw});
            if (report) *report = res.report;
            return select_display(res.exemplars, train_features_, split_.train_ids, labeled);
        }
    }
    throw std::logic_error("unknown strategy");
}

void Session::submit_labels(std::span<const LabelAnswer> answers) {
    if (phase_ != Phase::awaiting_labels)
        throw std::logic_error(std::string("session is ") + std::string(to_string(phase_)) + ", not awaiting labels");

    const auto display = current_display();
    std::map<int, int> given;
    for (const auto& a : answers) {
        if (std::find(display.begin(), display.end(), a.id) == display.end())
            throw ValidationError("id " + std::to_string(a.id) + " is not in the current display");
        if (a.label != -1 && a.label != 1)
            throw ValidationError("label must be -1 or +1 (id " + std::to_string(a.id) + ")");
        if (!given.emplace(a.id, a.label).second)
            throw ValidationError("id " + std::to_string(a.id) + " labeled twice");
    }
    for (int id : display)
        if (!given.contains(id)) throw ValidationError("missing label for id " + std::to_string(id));

    // Everything below works on copies; state is committed at the end.
    std::vector<int> ys;
    for (int id : display) ys.push_back(given.at(id));
    auto labels = labels_;
    labels.push_back(std::move(ys));

    const LabeledSet train_set = gather(*data_, displays_, labels);
    TrainConfig tc = cfg_.train;
    tc.seed = cfg_.seed;
    Scorer scorer = train(train_set, tc);

    const Eigen::VectorXd s = scorer.score_all(eval_features_);
    const std::vector<double> scores(s.begin(), s.end());
    auto metrics = metrics_;
    const int done = t_ + 1;
    metrics.push_back({done, eer(scores, eval_labels_),
                       sampling_rate(done, cfg_.display_size, static_cast<int>(data_->size()))});

    Rng rng = rng_;
    const std::uint64_t draw = rng.next_u64();
    auto displays = displays_;
    auto reports = solve_reports_;
    Phase phase = Phase::finished;
    if (done < cfg_.budget) {
        std::vector<int> labeled;
        for (const auto& d : displays) labeled.insert(labeled.end(), d.begin(), d.end());
        SolveReport report;
        displays.push_back(next_display(scorer, labeled, draw, &report));
        if (cfg_.strategy == SamplerKind::vexad) reports.push_back(std::move(report));
        phase = Phase::awaiting_labels;
    }

    labels_ = std::move(labels);
    scorer_ = std::move(scorer);
    metrics_ = std::move(metrics);
    displays_ = std::move(displays);
    solve_reports_ = std::move(reports);
    rng_ = rng;
    t_ = done;
    phase_ = phase;
}

json to_json(const SessionConfig& c) {
    return {{"strategy", std::string(to_string(c.strategy))},
            {"display_size", c.display_size},
            {"budget", c.budget},
            {"rep", c.weights.rep_on ? 1 : 0},
            {"alpha", c.weights.alpha},
            {"beta", c.weights.beta},
            {"gamma", c.weights.gamma},
            {"epsilon", c.epsilon},
            {"maxiter", c.max_iter},
            {"seed", c.seed},
            {"dataset", c.dataset},
            {"split_seed", c.split_seed},
            {"train",
             {{"l2_strength", c.train.l2_strength},
              {"max_epochs", c.train.max_epochs},
              {"grad_tol", c.train.grad_tol},
              {"class_balanced", c.train.class_balanced}}}};
}

SessionConfig session_config_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    SessionConfig c;
    try {
        if (j.contains("strategy")) {
            const auto s = j.at("strategy").get<std::string>();
            const auto k = parse_sampler_kind(s);
            if (!k) throw ValidationError("unknown strategy '" + s + "' (valid: " + sampler_kind_list() + ")");
            c.strategy = *k;
        }
        c.display_size = j.value("display_size", c.display_size);
        c.budget = j.value("budget", c.budget);
        if (j.contains("rep")) {
            const int rep = j.at("rep").is_boolean() ? (j.at("rep").get<bool>() ? 1 : 0) : j.at("rep").get<int>();
            if (rep != 0 && rep != 1) throw ValidationError("rep must be 0 or 1");
            c.weights.rep_on = rep == 1;
        }
        c.weights.alpha = j.value("alpha", c.weights.alpha);
        c.weights.beta = j.value("beta", c.weights.beta);
        c.weights.gamma = j.value("gamma", c.weights.gamma);
        c.epsilon = j.value("epsilon", c.epsilon);
        c.max_iter = j.value("maxiter", c.max_iter);
        c.seed = j.value("seed", c.seed);
        c.dataset = j.value("dataset", c.dataset);
        c.split_seed = j.value("split_seed", c.split_seed);
        if (j.contains("train")) {
            const auto& t = j.at("train");
            c.train.l2_strength = t.value("l2_strength", c.train.l2_strength);
            c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
            c.train.grad_tol = t.value("grad_tol", c.train.grad_tol);
            c.train.class_balanced = t.value("class_balanced", c.train.class_balanced);
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid config: ") + e.what());
    }
    return c;
}

json to_json(const EvalRecord& r) { return {{"iter", r.iter}, {"eer", r.eer}, {"samp_pct", r.samp_pct}}; }

json Session::to_json() const {
    json metrics = json::array();
    for (const auto& m : metrics_) metrics.push_back(vexad::to_json(m));
    json reports = json::array();
    for (const auto& r : solve_reports_) reports.push_back(vexad::to_json(r));
    json j = {{"version", kSessionFormatVersion},
              {"config", vexad::to_json(cfg_)},
              {"t", t_},
              {"phase", std::string(to_string(phase_))},
              {"displays", displays_},
              {"labels", labels_},
              {"metrics", metrics},
              {"solve_reports", reports},
              {"rng_state", rng_.state()}};
    j["scorer"] = labels_.empty() ? json(nullptr) : vexad::to_json(scorer_);
    return j;
}

Session Session::from_json(const json& j, std::shared_ptr<const Dataset> data) {
    try {
        const int version = j.at("version").get<int>();
        if (version != kSessionFormatVersion)
            throw ValidationError("session format version " + std::to_string(version) + " is not supported (expected " +
                                  std::to_string(kSessionFormatVersion) + ")");
        SessionConfig cfg = session_config_from_json(j.at("config"));
        if (data && !cfg.dataset.empty() && cfg.dataset != data->name)
            throw ValidationError("session was created on dataset '" + cfg.dataset + "', not '" + data->name + "'");

        Session s(std::move(data), std::move(cfg), false);
        s.t_ = j.at("t").get<int>();
        const auto phase = j.at("phase").get<std::string>();
        if (phase == "awaiting_labels")
            s.phase_ = Phase::awaiting_labels;
        else if (phase == "ready")
            s.phase_ = Phase::ready;
        else if (phase == "finished")
            s.phase_ = Phase::finished;
        else
            throw ValidationError("unknown phase '" + phase + "'");
        s.displays_ = j.at("displays").get<std::vector<std::vector<int>>>();
        s.labels_ = j.at("labels").get<std::vector<std::vector<int>>>();
        for (const auto& m : j.at("metrics"))
            s.metrics_.push_back({m.at("iter").get<int>(), m.at("eer").get<double>(), m.at("samp_pct").get<double>()});
        if (j.contains("solve_reports"))
            for (const auto& r : j.at("solve_reports")) s.solve_reports_.push_back(solve_report_from_json(r));
        if (!j.at("scorer").is_null()) s.scorer_ = scorer_from_json(j.at("scorer"));
        s.rng_.set_state(j.at("rng_state").get<std::uint64_t>());

        // Structural checks.
        const std::size_t K = static_cast<std::size_t>(s.cfg_.display_size);
        std::set<int> seen;
        for (const auto& d : s.displays_) {
            if (d.size() != K) throw ValidationError("display size does not match config");
            for (int id : d) {
                if (!std::binary_search(s.split_.train_ids.begin(), s.split_.train_ids.end(), id))
                    throw ValidationError("display id " + std::to_string(id) + " is not in the training pool");
                if (!seen.insert(id).second) throw ValidationError("display id " + std::to_string(id) + " repeated");
            }
        }
        if (s.labels_.size() != static_cast<std::size_t>(s.t_) || s.metrics_.size() != s.labels_.size() ||
            s.t_ > s.cfg_.budget)
            throw ValidationError("inconsistent iteration counters");
        const std::size_t expected_displays = s.phase_ == Phase::finished ? s.labels_.size() : s.labels_.size() + 1;
        if (s.displays_.size() != expected_displays) throw ValidationError("display count does not match phase");
        for (std::size_t k = 0; k < s.labels_.size(); ++k)
            if (s.labels_[k].size() != K) throw ValidationError("label count does not match display");
        return s;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("corrupt session state: ") + e.what());
    }
}

void Session::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << to_json().dump(1) << '\n';
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

Session Session::load(const std::filesystem::path& path, std::shared_ptr<const Dataset> data) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("cannot parse session file " + path.string() + ": " + e.what());
    }
    return from_json(j, std::move(data));
}

Session run_simulated(std::shared_ptr<const Dataset> data, const SessionConfig& cfg) {
    Session s(std::move(data), cfg);
    while (s.phase() == Phase::awaiting_labels) {
        const auto display = s.current_display();
        const auto answers = simulated_oracle(s.dataset(), display);
        s.submit_labels(answers);
    }
    return s;
}

}  // namespace vexad
