#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vexad/dataset.hpp"
#include "vexad/session.hpp"

namespace httplib {
class Server;
}

namespace vexad {

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

/// Body of every non-2xx response: {"code": ..., "message": ...}.
ApiResponse api_error(int status, const std::string& code, const std::string& message);

struct ServiceOptions {
    std::filesystem::path data_dir;  // session persistence; empty = no persistence
    std::filesystem::path ui_dir;    // static assets; empty = none
};

/// Interactive sessions over one dataset. Every handler is a thin adapter
/// over Session; per-session mutations are serialized by a per-session mutex.
class SessionService {
public:
    SessionService(std::shared_ptr<const Dataset> data, ServiceOptions opt);

    ApiResponse create_session(const std::string& body);
    ApiResponse get_session(const std::string& id) const;
    ApiResponse get_display(const std::string& id) const;
    ApiResponse post_labels(const std::string& id, const std::string& body);
    ApiResponse get_report(const std::string& id) const;

    /// Registers the REST routes (and static assets) on `server`.
    void mount(httplib::Server& server);

    std::size_t session_count() const;

private:
    struct Entry {
        mutable std::mutex guard;
        Session session;
        explicit Entry(Session s) : session(std::move(s)) {}
    };

    std::shared_ptr<Entry> find(const std::string& id) const;
    nlohmann::json display_items(const Session& s) const;
    void persist(const std::string& id, const Session& s) const;

    std::shared_ptr<const Dataset> data_;
    ServiceOptions opt_;
    Eigen::MatrixXd projection_;  // 2 x n, first two principal directions
    mutable std::shared_mutex map_guard_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// Opaque random 128-bit identifier, 32 lowercase hex digits.
std::string new_session_id();

}  // namespace vexad
