#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>

// Eigen must be seen before httplib: <resolv.h> defines a `_res` macro.
#include "iws/error.hpp"
#include "iws/session.hpp"

#include <httplib.h>
#include <json.hpp>

namespace iws {

/// Error surfaced to HTTP clients as {code, message, field?}.
struct ApiError {
    int status;
    std::string code;
    std::string message;
    std::string field;

    nlohmann::ordered_json body() const
    {
        nlohmann::ordered_json j{{"code", code}, {"message", message}};
        if (!field.empty())
            j["field"] = field;
        return j;
    }
};

struct ServerOptions {
    std::optional<std::filesystem::path> session_dir;  ///< write-ahead persistence, one JSON file per session
    std::optional<std::string> ui_dir;                 ///< static bundle served at /
    AcquisitionConfig defaults;
    int default_T = 200;
    int refit_stride = 1;
};

/// Session registry plus the HTTP front end. Requests for one session are
/// serialized on that session's mutex.
class Server {
public:
    Server(const Workspace& ws, ServerOptions opts = {}) : _ws(ws), _opts(std::move(opts))
    {
        if (_opts.session_dir) {
            std::filesystem::create_directories(*_opts.session_dir);
            restore_sessions();
        }
        routes();
    }

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // --- API operations (also called directly by tests) ---------------------

    nlohmann::ordered_json create_session(const nlohmann::json& payload)
    {
        if (!payload.is_object())
            throw ApiError{400, "invalid_config", "config payload must be a JSON object", ""};
        AcquisitionConfig cfg = _opts.defaults;
        int T = _opts.default_T;
        int stride = _opts.refit_stride;
        try {
            if (payload.contains("mode"))
                cfg.mode = parse_mode(payload["mode"].get<std::string>());
            if (payload.contains("r"))
                cfg.r = payload["r"].get<double>();
            if (payload.contains("mtilde"))
                cfg.m_tilde = payload["mtilde"].get<std::size_t>();
            if (payload.contains("seed"))
                cfg.seed = payload["seed"].get<std::uint64_t>();
            if (payload.contains("T"))
                T = payload["T"].get<int>();
            if (payload.contains("refit_stride"))
                stride = payload["refit_stride"].get<int>();
        } catch (const ConfigError& e) {
            throw ApiError{400, "invalid_config", e.what(), e.field()};
        } catch (const nlohmann::json::exception& e) {
            throw ApiError{400, "invalid_config", std::string("bad field type: ") + e.what(), ""};
        }
        SessionState state;
        try {
            state = init_session(_ws, cfg, T, stride);
        } catch (const ConfigError& e) {
            throw ApiError{400, "invalid_config", e.what(), e.field()};
        }
        auto entry = std::make_shared<Entry>();
        entry->state = std::move(state);
        std::string id;
        {
            std::unique_lock lock(_registry);
            do
                id = random_id();
            while (_sessions.count(id));
            _sessions.emplace(id, entry);
        }
        std::lock_guard g(entry->mu);
        persist(id, entry->state);
        return {{"session_id", id}, {"iteration", entry->state.iteration}, {"T", entry->state.T}};
    }

    nlohmann::ordered_json get_next(const std::string& id)
    {
        auto e = lookup(id);
        std::lock_guard g(e->mu);
        auto& s = e->state;
        if (s.pending)
            throw ApiError{409, "query_pending", "LF " + std::to_string(*s.pending) + " is awaiting a response", ""};
        Query q;
        try {
            q = next_query(s, _ws);
        } catch (const SessionComplete&) {
            return {{"status", "complete"}, {"iteration", s.iteration}, {"T", s.T}};
        } catch (const ProtocolError& err) {
            throw ApiError{409, "protocol", err.what(), ""};
        }
        persist(id, s);
        return query_payload(s, q);
    }

    nlohmann::ordered_json post_response(const std::string& id, const nlohmann::json& body)
    {
        auto e = lookup(id);
        std::size_t lf_id;
        Response response;
        bool confident = true;
        try {
            lf_id = body.at("lf_id").get<std::size_t>();
            response = parse_response(body.at("response").get<std::string>());
            if (body.contains("confident"))
                confident = body["confident"].get<bool>();
        } catch (const ConfigError& err) {
            throw ApiError{400, "invalid_response", err.what(), "response"};
        } catch (const nlohmann::json::exception& err) {
            throw ApiError{400, "invalid_response", std::string("response payload needs lf_id and response: ") + err.what(), ""};
        }
        std::lock_guard g(e->mu);
        auto& s = e->state;
        if (s.Q.contains(lf_id))
            return {{"iteration", s.iteration}, {"recorded", false}, {"duplicate", true}};
        if (!s.pending || *s.pending != lf_id)
            throw ApiError{409, "not_pending", "LF " + std::to_string(lf_id) + " is not the pending query", "lf_id"};
        SessionState next = s;
        record_response(next, lf_id, response, confident);
        persist(id, next);  // durable before acknowledging
        s = std::move(next);
        return {{"iteration", s.iteration}, {"recorded", true}, {"duplicate", false}};
    }

    nlohmann::ordered_json post_finalize(const std::string& id, const nlohmann::json& body)
    {
        auto e = lookup(id);
        Scenario scenario;
        try {
            scenario = parse_scenario(body.at("scenario").get<std::string>());
        } catch (const ConfigError& err) {
            throw ApiError{400, "invalid_scenario", err.what(), "scenario"};
        } catch (const nlohmann::json::exception&) {
            throw ApiError{400, "invalid_scenario", "finalize payload needs a scenario string", "scenario"};
        }
        std::lock_guard g(e->mu);
        if (e->state.Q.size() < kSeedQueries)
            throw ApiError{400, "too_few_annotations", "finalizing needs at least 8 annotations", ""};
        auto j = to_json(finalize_pipeline(e->state, _ws, scenario));
        j["scenario"] = to_string(scenario);
        return j;
    }

    nlohmann::ordered_json get_state(const std::string& id)
    {
        auto e = lookup(id);
        std::lock_guard g(e->mu);
        const auto& s = e->state;
        auto history = nlohmann::ordered_json::array();
        for (const auto& r : s.Q.records()) {
            const auto& lf = _ws.pool.at(r.lf_id);
            history.push_back({{"iteration", r.iteration},
                               {"lf_id", r.lf_id},
                               {"description", lf.describe()},
                               {"response", to_string(r.response)},
                               {"confident", r.weight == 1.0}});
        }
        nlohmann::ordered_json j;
        j["session_id"] = id;
        j["mode"] = to_string(s.config.mode);
        j["iteration"] = s.iteration;
        j["T"] = s.T;
        j["pending"] = s.pending ? nlohmann::ordered_json(*s.pending) : nlohmann::ordered_json(nullptr);
        if (s.pending)
            j["query"] = query_payload(s, describe_query(s, _ws, *s.pending));
        j["complete"] = !s.pending && s.complete(_ws.p());
        j["history"] = std::move(history);
        return j;
    }

    std::optional<SessionState> snapshot(const std::string& id)
    {
        std::shared_ptr<Entry> e;
        try {
            e = lookup(id);
        } catch (const ApiError&) {
            return std::nullopt;
        }
        std::lock_guard g(e->mu);
        return e->state;
    }

    std::size_t session_count() const
    {
        std::shared_lock lock(_registry);
        return _sessions.size();
    }

    // --- HTTP ---------------------------------------------------------------

    bool listen(const std::string& host, int port) { return _http.listen(host, port); }
    int bind_to_any_port(const std::string& host) { return _http.bind_to_any_port(host); }
    bool listen_after_bind() { return _http.listen_after_bind(); }
    void stop() { _http.stop(); }
    bool is_running() const { return _http.is_running(); }
    void wait_until_ready() const { _http.wait_until_ready(); }

private:
    struct Entry {
        std::mutex mu;
        SessionState state;
    };

    static std::string random_id()
    {
        std::random_device rd;
        std::uniform_int_distribution<unsigned> nib(0, 15);
        std::string id;
        for (int i = 0; i < 32; ++i)
            id.push_back("0123456789abcdef"[nib(rd)]);
        return id;
    }

    std::shared_ptr<Entry> lookup(const std::string& id)
    {
        std::shared_lock lock(_registry);
        auto it = _sessions.find(id);
        if (it == _sessions.end())
            throw ApiError{404, "unknown_session", "no session '" + id + "'", ""};
        return it->second;
    }

    nlohmann::ordered_json query_payload(const SessionState& s, const Query& q) const
    {
        const auto& lf = _ws.pool.at(q.lf_id);
        nlohmann::ordered_json j;
        j["status"] = "query";
        j["lf_id"] = q.lf_id;
        j["kind"] = to_string(lf.kind);
        if (lf.kind == LfKind::keyword) {
            j["keyword"] = lf.keyword;
        } else {
            std::vector<std::string> core(lf.core_ids.begin(), lf.core_ids.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(20, lf.core_ids.size())));
            j["cluster"] = {{"size", lf.member_ids.size()}, {"core_size", lf.core_ids.size()}, {"core_ids", core}};
        }
        j["target_label"] = lf.target_label;
        j["description"] = q.description;
        auto snippets = nlohmann::ordered_json::array();
        for (const auto& sn : q.snippets)
            snippets.push_back({{"doc_id", sn.doc_id}, {"text", sn.text}});
        j["snippets"] = std::move(snippets);
        j["snippets_collapsed"] = true;
        j["iteration"] = s.iteration;
        j["T"] = s.T;
        return j;
    }

    void persist(const std::string& id, const SessionState& s)
    {
        if (_opts.session_dir)
            save_session(s, *_opts.session_dir / (id + ".json"));
    }

    void restore_sessions()
    {
        for (const auto& f : std::filesystem::directory_iterator(*_opts.session_dir)) {
            if (f.path().extension() != ".json")
                continue;
            try {
                auto state = load_session(f.path());
                if (state.pool_ref != _ws.pool_ref) {
                    std::cerr << "skipping session " << f.path() << ": built for a different LF pool\n";
                    continue;
                }
                auto entry = std::make_shared<Entry>();
                entry->state = std::move(state);
                _sessions.emplace(f.path().stem().string(), std::move(entry));
            } catch (const Error& e) {
                std::cerr << "skipping session " << f.path() << ": " << e.what() << "\n";
            }
        }
    }

    template <typename Fn>
    void respond(httplib::Response& res, int ok_status, Fn&& fn)
    {
        try {
            res.status = ok_status;
            res.set_content(fn().dump(), "application/json");
        } catch (const ApiError& e) {
            res.status = e.status;
            res.set_content(e.body().dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(ApiError{500, "internal", e.what(), ""}.body().dump(), "application/json");
        }
    }

    static nlohmann::json parse_body(const httplib::Request& req)
    {
        if (req.body.empty())
            return nlohmann::json::object();
        try {
            return nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ApiError{400, "malformed_json", e.what(), ""};
        }
    }

    void routes()
    {
        _http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            respond(res, 201, [&] { return create_session(parse_body(req)); });
        });
        _http.Get(R"(/sessions/([0-9A-Za-z]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
            respond(res, 200, [&] { return get_next(req.matches[1]); });
        });
        _http.Post(R"(/sessions/([0-9A-Za-z]+)/responses)", [this](const httplib::Request& req, httplib::Response& res) {
            respond(res, 200, [&] { return post_response(req.matches[1], parse_body(req)); });
        });
        _http.Post(R"(/sessions/([0-9A-Za-z]+)/finalize)", [this](const httplib::Request& req, httplib::Response& res) {
            respond(res, 200, [&] { return post_finalize(req.matches[1], parse_body(req)); });
        });
        _http.Get(R"(/sessions/([0-9A-Za-z]+)/state)", [this](const httplib::Request& req, httplib::Response& res) {
            respond(res, 200, [&] { return get_state(req.matches[1]); });
        });
        if (_opts.ui_dir)
            _http.set_mount_point("/", *_opts.ui_dir);
    }

    const Workspace& _ws;
    ServerOptions _opts;
    mutable std::shared_mutex _registry;
    std::map<std::string, std::shared_ptr<Entry>> _sessions;
    httplib::Server _http;
};

} // namespace iws
