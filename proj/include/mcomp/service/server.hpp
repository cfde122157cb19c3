#pragma once

#include <string>

#include "mcomp/service/session.hpp"

namespace httplib {
class Server;
}

namespace mcomp {

inline constexpr int kDefaultPort = 7860;
inline constexpr const char* kCheckpointEnv = "MOTION_COMPOSE_CHECKPOINT";
inline constexpr const char* kPortEnv = "MOTION_COMPOSE_PORT";

// Routes:
//   POST   /sessions                  {seed?} -> 201 {id, seed}
//   POST   /sessions/{id}/actions     {text, duration_s, idempotency_key?}
//                                     -> {span: {start, end}, frames: [...]}
//   GET    /sessions/{id}/motion      -> motion file
//   GET    /sessions/{id}             -> metadata
//   DELETE /sessions/{id}             -> 204
// Errors carry {"error": message}: 404 unknown session, 422 invalid prompt,
// 409 idempotency conflict or empty export, 400 malformed body.
void register_routes(httplib::Server& server, SessionManager& sessions);

// Port from MOTION_COMPOSE_PORT, else the default. Throws
// std::invalid_argument for a malformed value.
int port_from_env();

} // namespace mcomp
