#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcomp/compose/compose.hpp"
#include "mcomp/core/motion_io.hpp"

namespace mcomp {

class UnknownSession : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class InvalidPrompt : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IdempotencyConflict : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptySession : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AppendResult {
    FrameSpan span;
    std::vector<Pose> frames;
};

struct SessionInfo {
    std::string id;
    std::uint64_t seed = 0;
    std::int64_t created_at = 0;  // seconds since the epoch
    std::vector<Prompt> prompts;
    std::vector<FrameSpan> spans;
    std::size_t frames = 0;
};

struct SessionOptions {
    StitchOptions stitch;
    SampleMode mode = SampleMode::stochastic;
    // When set, every session is mirrored to <dir>/<id>.json and reloaded on
    // construction.
    std::optional<std::filesystem::path> persist_dir;
};

// Interactive composition sessions over one read-only model. Appends to one
// session are serialized; different sessions proceed independently.
class SessionManager {
public:
    SessionManager(std::shared_ptr<const TeachModel> model, SessionOptions options = {});

    // A seed of nullopt draws a fresh one.
    std::string create(std::optional<std::uint64_t> seed = std::nullopt);

    // Generates the next action conditioned on the last action of the
    // session, aligns and stitches it. The same idempotency key with the same
    // prompt returns the stored result; with another prompt it throws
    // IdempotencyConflict. Failures leave the session unchanged.
    AppendResult append(const std::string& id, const std::string& text, double duration_s,
                        const std::optional<std::string>& idempotency_key = std::nullopt);

    SessionInfo info(const std::string& id) const;
    // Throws EmptySession before the first append.
    MotionFile export_motion(const std::string& id) const;
    void remove(const std::string& id);
    std::vector<std::string> ids() const;

    const TeachModel& model() const { return *model_; }

private:
    struct Session {
        mutable std::mutex mutex;
        std::string id;
        std::uint64_t seed = 0;
        std::int64_t created_at = 0;
        std::vector<Prompt> prompts;
        std::vector<FrameSpan> spans;
        std::optional<Motion> motion;
        struct Stored {
            Prompt prompt;
            AppendResult result;
        };
        std::map<std::string, Stored> idempotency;
    };

    std::shared_ptr<Session> find(const std::string& id) const;
    void persist(const Session& s) const;
    void load_persisted();
    nlohmann::json session_json(const Session& s) const;

    std::shared_ptr<const TeachModel> model_;
    SessionOptions options_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::mt19937_64 id_rng_;
};

} // namespace mcomp
