#include "vexad/service.hpp"

#include <random>
#include <sstream>

#include <httplib.h>

#include "vexad/errors.hpp"

namespace vexad {

using nlohmann::json;

namespace {

Eigen::MatrixXd principal_projection(const Dataset& ds) {
    std::vector<int> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    const Eigen::MatrixXd X = feature_matrix(ds, all);
    const Eigen::MatrixXd C = X.colwise() - X.rowwise().mean();
    const Eigen::MatrixXd cov = C * C.transpose() / std::max<double>(1.0, static_cast<double>(X.cols()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::Index d = X.rows();
    Eigen::MatrixXd basis(d, 2);
    basis.setZero();
    for (Eigen::Index c = 0; c < std::min<Eigen::Index>(2, d); ++c) {
        Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - c);
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0) v = -v;
        basis.col(c) = v;
    }
    return basis.transpose() * C;
}

std::string phase_error(const Session& s) {
    return "session is " + std::string(to_string(s.phase())) + ", not awaiting labels";
}

}  // namespace

ApiResponse api_error(int status, const std::string& code, const std::string& message) {
    return {status, {{"code", code}, {"message", message}}};
}

std::string new_session_id() {
    std::random_device rd;
    std::ostringstream os;
    os << std::hex;
    for (int i = 0; i < 4; ++i) {
        char buf[9];
        std::snprintf(buf, sizeof(buf), "%08x", static_cast<unsigned>(rd()));
        os << buf;
    }
    return os.str();
}

SessionService::SessionService(std::shared_ptr<const Dataset> data, ServiceOptions opt)
    : data_(std::move(data)), opt_(std::move(opt)), projection_(principal_projection(*data_)) {
    if (opt_.data_dir.empty() || !std::filesystem::is_directory(opt_.data_dir)) return;
    // Resume sessions persisted by an earlier process on the same dataset.
    for (const auto& entry : std::filesystem::directory_iterator(opt_.data_dir)) {
        const auto file = entry.path() / "session.json";
        if (!entry.is_directory() || !std::filesystem::exists(file)) continue;
        try {
            sessions_.emplace(entry.path().filename().string(),
                              std::make_shared<Entry>(Session::load(file, data_)));
        } catch (const std::exception&) {
            // sessions of other datasets or unreadable files stay on disk untouched
        }
    }
}

std::size_t SessionService::session_count() const {
    std::shared_lock lock(map_guard_);
    return sessions_.size();
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) const {
    std::shared_lock lock(map_guard_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

void SessionService::persist(const std::string& id, const Session& s) const {
    if (opt_.data_dir.empty()) return;
    s.save(opt_.data_dir / id / "session.json");
}

json SessionService::display_items(const Session& s) const {
    json items = json::array();
    for (int id : s.current_display()) {
        const Sample& smp = data_->samples.at(id);
        json item = {{"id", id},
                     {"features", smp.features},
                     {"projection", {projection_(0, id), projection_(1, id)}}};
        if (smp.pixels_before && smp.pixels_after) {
            item["pixels_a"] = std::vector<int>(smp.pixels_before->begin(), smp.pixels_before->end());
            item["pixels_b"] = std::vector<int>(smp.pixels_after->begin(), smp.pixels_after->end());
        }
        items.push_back(std::move(item));
    }
    return items;
}

ApiResponse SessionService::create_session(const std::string& body) {
    json cfg_json;
    try {
        cfg_json = body.empty() ? json::object() : json::parse(body);
    } catch (const json::parse_error& e) {
        return api_error(400, "bad_request", std::string("malformed JSON: ") + e.what());
    }
    if (cfg_json.contains("config")) cfg_json = cfg_json["config"];
    std::optional<Session> session;
    try {
        SessionConfig cfg = session_config_from_json(cfg_json);
        if (cfg.dataset.empty()) cfg.dataset = data_->name;
        if (cfg.dataset != data_->name)
            return api_error(422, "validation", "this service hosts dataset '" + data_->name + "'");
        session.emplace(data_, cfg);
    } catch (const std::exception& e) {
        return api_error(422, "validation", e.what());
    }

    const std::string id = new_session_id();
    auto entry = std::make_shared<Entry>(std::move(*session));
    std::lock_guard lock(entry->guard);
    {
        std::unique_lock map_lock(map_guard_);
        sessions_.emplace(id, entry);
    }
    persist(id, entry->session);
    return {201, {{"session_id", id}, {"display", display_items(entry->session)}}};
}

ApiResponse SessionService::get_session(const std::string& id) const {
    const auto entry = find(id);
    if (!entry) return api_error(404, "not_found", "no session " + id);
    std::lock_guard lock(entry->guard);
    json j = entry->session.to_json();
    j.erase("rng_state");
    j["session_id"] = id;
    return {200, j};
}

ApiResponse SessionService::get_display(const std::string& id) const {
    const auto entry = find(id);
    if (!entry) return api_error(404, "not_found", "no session " + id);
    std::lock_guard lock(entry->guard);
    const Session& s = entry->session;
    return {200,
            {{"t", s.iteration()},
             {"phase", std::string(to_string(s.phase()))},
             {"finished", s.phase() == Phase::finished},
             {"display", display_items(s)}}};
}

ApiResponse SessionService::post_labels(const std::string& id, const std::string& body) {
    const auto entry = find(id);
    if (!entry) return api_error(404, "not_found", "no session " + id);

    std::vector<LabelAnswer> answers;
    try {
        const json j = json::parse(body);
        for (const auto& a : j.at("labels")) answers.push_back({a.at("id").get<int>(), a.at("label").get<int>()});
    } catch (const json::exception& e) {
        return api_error(400, "bad_request", std::string("expected {\"labels\":[{\"id\":int,\"label\":-1|1}...]}: ") +
                                                 e.what());
    }

    std::lock_guard lock(entry->guard);
    Session& s = entry->session;
    if (s.phase() != Phase::awaiting_labels) return api_error(409, "wrong_phase", phase_error(s));
    try {
        s.submit_labels(answers);
    } catch (const ValidationError& e) {
        return api_error(409, "validation", e.what());
    }
    persist(id, s);

    json metrics = json::array();
    for (const auto& m : s.metrics()) metrics.push_back(to_json(m));
    json out = {{"t", s.iteration()}, {"finished", s.phase() == Phase::finished}, {"metrics", metrics}};
    if (s.phase() != Phase::finished) out["display"] = display_items(s);
    return {200, out};
}

ApiResponse SessionService::get_report(const std::string& id) const {
    const auto entry = find(id);
    if (!entry) return api_error(404, "not_found", "no session " + id);
    std::lock_guard lock(entry->guard);
    const auto& m = entry->session.metrics();
    json records = json::array();
    for (const auto& r : m) records.push_back(to_json(r));
    return {200, {{"records", records}, {"auc", m.empty() ? json(nullptr) : json(auc(m))}}};
}

void SessionService::mount(httplib::Server& server) {
    auto reply = [](httplib::Response& res, const ApiResponse& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    server.Post("/api/sessions", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, create_session(req.body));
    });
    server.Get(R"(/api/sessions/([0-9a-f]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, get_session(req.matches[1]));
    });
    server.Get(R"(/api/sessions/([0-9a-f]+)/display)",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                   reply(res, get_display(req.matches[1]));
               });
    server.Post(R"(/api/sessions/([0-9a-f]+)/labels)",
                [this, reply](const httplib::Request& req, httplib::Response& res) {
                    reply(res, post_labels(req.matches[1], req.body));
                });
    server.Get(R"(/api/sessions/([0-9a-f]+)/report)",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                   reply(res, get_report(req.matches[1]));
               });
    if (!opt_.ui_dir.empty()) server.set_mount_point("/", opt_.ui_dir.string());
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.status == 404 && res.body.empty())
            res.set_content(api_error(404, "not_found", "no such route").body.dump(), "application/json");
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string msg = "internal error";
        try {
            if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            msg = e.what();
        }
        res.status = 500;
        res.set_content(json{{"code", "bad_request"}, {"message", msg}}.dump(), "application/json");
    });
}

}  // namespace vexad
