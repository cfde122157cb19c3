#include "mcomp/service/server.hpp"

#include <cstdlib>

#include <httplib.h>

namespace mcomp {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message)
{
    send_json(res, status, {{"error", message}});
}

json span_json(const FrameSpan& s)
{
    return {{"start", s.begin}, {"end", s.end}};
}

// Runs a handler, mapping domain errors to HTTP statuses.
template <typename F>
void guarded(httplib::Response& res, F&& body)
{
    try {
        body();
    } catch (const UnknownSession& e) {
        send_error(res, 404, e.what());
    } catch (const IdempotencyConflict& e) {
        send_error(res, 409, e.what());
    } catch (const EmptySession& e) {
        send_error(res, 409, e.what());
    } catch (const json::exception& e) {
        send_error(res, 400, std::string("malformed request body: ") + e.what());
    } catch (const InvalidPrompt& e) {
        send_error(res, 422, e.what());
    } catch (const std::invalid_argument& e) {
        send_error(res, 422, e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, e.what());
    }
}

json parse_body(const httplib::Request& req)
{
    if (req.body.empty()) {
        return json::object();
    }
    json j = json::parse(req.body);
    if (!j.is_object()) {
        throw json::type_error::create(302, "request body must be a JSON object", nullptr);
    }
    return j;
}

} // namespace

void register_routes(httplib::Server& server, SessionManager& sessions)
{
    server.Post("/sessions", [&sessions](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = parse_body(req);
            std::optional<std::uint64_t> seed;
            if (body.contains("seed")) {
                seed = body.at("seed").get<std::uint64_t>();
            }
            const std::string id = sessions.create(seed);
            send_json(res, 201, {{"id", id}, {"seed", sessions.info(id).seed}});
        });
    });

    server.Post(R"(/sessions/([^/]+)/actions)", [&sessions](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const std::string id = req.matches[1];
            const json body = parse_body(req);
            if (!body.contains("text") || !body.at("text").is_string()) {
                sessions.info(id);
                throw InvalidPrompt("text must be a string");
            }
            if (!body.contains("duration_s") || !body.at("duration_s").is_number()) {
                sessions.info(id);
                throw InvalidPrompt("duration_s must be a number");
            }
            std::optional<std::string> key;
            if (body.contains("idempotency_key") && !body.at("idempotency_key").is_null()) {
                key = body.at("idempotency_key").get<std::string>();
            }
            const AppendResult r =
                sessions.append(id, body.at("text").get<std::string>(), body.at("duration_s").get<double>(), key);
            json frames = json::array();
            for (const Pose& p : r.frames) {
                frames.push_back(pose_to_json(p));
            }
            send_json(res, 200, {{"span", span_json(r.span)}, {"frames", frames}});
        });
    });

    server.Get(R"(/sessions/([^/]+)/motion)", [&sessions](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            res.status = 200;
            res.set_content(dump_motion_file(sessions.export_motion(req.matches[1])), "application/json");
        });
    });

    server.Get(R"(/sessions/([^/]+))", [&sessions](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const SessionInfo info = sessions.info(req.matches[1]);
            json prompts = json::array();
            for (std::size_t i = 0; i < info.prompts.size(); ++i) {
                prompts.push_back({{"text", info.prompts[i].text},
                                   {"duration_s", info.prompts[i].duration_s},
                                   {"span", span_json(info.spans[i])}});
            }
            send_json(res, 200,
                      {{"id", info.id},
                       {"seed", info.seed},
                       {"created_at", info.created_at},
                       {"prompts", prompts},
                       {"frames", info.frames},
                       {"fps", sessions.model().config().fps}});
        });
    });

    server.Delete(R"(/sessions/([^/]+))", [&sessions](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            sessions.remove(req.matches[1]);
            res.status = 204;
        });
    });
}

int port_from_env()
{
    const char* v = std::getenv(kPortEnv);
    if (v == nullptr || *v == '\0') {
        return kDefaultPort;
    }
    char* end = nullptr;
    const long p = std::strtol(v, &end, 10);
    if (*end != '\0' || p < 0 || p > 65535) {
        throw std::invalid_argument(std::string(kPortEnv) + " is not a valid port: '" + v + "'");
    }
    return static_cast<int>(p);
}

} // namespace mcomp
