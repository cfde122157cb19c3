#include "mcomp/service/session.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "mcomp/core/seed.hpp"
#include "mcomp/text/tokenizer.hpp"

namespace mcomp {

namespace fs = std::filesystem;

namespace {

bool has_words(const std::string& text)
{
    try {
        for (const std::string& w : split_words(text)) {
            if (w != ",") {
                return true;
            }
        }
    } catch (const EmptyText&) {
    }
    return false;
}

} // namespace

SessionManager::SessionManager(std::shared_ptr<const TeachModel> model, SessionOptions options)
    : model_(std::move(model)), options_(std::move(options)), id_rng_(std::random_device{}())
{
    if (!model_) {
        throw std::invalid_argument("session manager needs a model");
    }
    if (options_.stitch.slerp_frames < 0) {
        throw std::invalid_argument("slerp frame count must be non-negative");
    }
    if (options_.persist_dir) {
        fs::create_directories(*options_.persist_dir);
        load_persisted();
    }
}

std::string SessionManager::create(std::optional<std::uint64_t> seed)
{
    auto s = std::make_shared<Session>();
    s->created_at =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
    std::unique_lock lock(map_mutex_);
    s->seed = seed ? *seed : id_rng_();
    do {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_rng_()));
        s->id = buf;
    } while (sessions_.contains(s->id));
    sessions_[s->id] = s;
    lock.unlock();
    persist(*s);
    return s->id;
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const
{
    std::shared_lock lock(map_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        throw UnknownSession("unknown session '" + id + "'");
    }
    return it->second;
}

AppendResult SessionManager::append(const std::string& id, const std::string& text, double duration_s,
                                    const std::optional<std::string>& idempotency_key)
{
    const std::shared_ptr<Session> s = find(id);
    std::lock_guard lock(s->mutex);
    if (idempotency_key) {
        const auto it = s->idempotency.find(*idempotency_key);
        if (it != s->idempotency.end()) {
            if (it->second.prompt.text != text || it->second.prompt.duration_s != duration_s) {
                throw IdempotencyConflict("idempotency key '" + *idempotency_key +
                                          "' was already used with a different prompt");
            }
            return it->second.result;
        }
    }
    if (!std::isfinite(duration_s) || duration_s <= 0.0) {
        throw InvalidPrompt("duration_s must be a positive number");
    }
    if (!has_words(text)) {
        throw InvalidPrompt("prompt text has no words");
    }

    const std::size_t index = s->prompts.size();
    const int frames = model_->frames_for(duration_s);
    const std::uint64_t seed = derive_seed(s->seed, index);
    Motion next = [&] {
        if (!s->motion) {
            return model_->generate_next(nullptr, text, frames, options_.mode, seed);
        }
        const FrameSpan& last = s->spans.back();
        const Motion previous = s->motion->slice(last.begin, last.end);
        return model_->generate_next(&previous, text, frames, options_.mode, seed);
    }();
    Motion combined = s->motion ? slerp_stitch(*s->motion, align_second(*s->motion, next), options_.stitch.slerp_frames,
                                               options_.stitch.mode)
                                : std::move(next);

    const FrameSpan span{s->motion ? s->motion->size() : 0, combined.size()};
    AppendResult result{span, {combined.frames().begin() + static_cast<std::ptrdiff_t>(span.begin),
                               combined.frames().end()}};
    s->motion = std::move(combined);
    s->prompts.push_back({text, duration_s});
    s->spans.push_back(span);
    if (idempotency_key) {
        s->idempotency[*idempotency_key] = {{text, duration_s}, result};
    }
    persist(*s);
    return result;
}

SessionInfo SessionManager::info(const std::string& id) const
{
    const std::shared_ptr<Session> s = find(id);
    std::lock_guard lock(s->mutex);
    return {s->id, s->seed, s->created_at, s->prompts, s->spans, s->motion ? s->motion->size() : 0};
}

MotionFile SessionManager::export_motion(const std::string& id) const
{
    const std::shared_ptr<Session> s = find(id);
    std::lock_guard lock(s->mutex);
    if (!s->motion) {
        throw EmptySession("session '" + id + "' has no motion yet");
    }
    MotionFile f{*s->motion, {}};
    for (std::size_t i = 0; i < s->prompts.size(); ++i) {
        f.labels.push_back(
            {s->prompts[i].text, static_cast<int>(s->spans[i].begin), static_cast<int>(s->spans[i].end)});
    }
    return f;
}

void SessionManager::remove(const std::string& id)
{
    std::unique_lock lock(map_mutex_);
    if (sessions_.erase(id) == 0) {
        throw UnknownSession("unknown session '" + id + "'");
    }
    lock.unlock();
    if (options_.persist_dir) {
        fs::remove(*options_.persist_dir / (id + ".json"));
    }
}

std::vector<std::string> SessionManager::ids() const
{
    std::shared_lock lock(map_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) {
        out.push_back(id);
    }
    return out;
}

nlohmann::json SessionManager::session_json(const Session& s) const
{
    nlohmann::json prompts = nlohmann::json::array();
    for (std::size_t i = 0; i < s.prompts.size(); ++i) {
        prompts.push_back({{"text", s.prompts[i].text},
                           {"duration_s", s.prompts[i].duration_s},
                           {"start", s.spans[i].begin},
                           {"end", s.spans[i].end}});
    }
    nlohmann::json keys = nlohmann::json::object();
    for (const auto& [key, stored] : s.idempotency) {
        keys[key] = {{"text", stored.prompt.text},
                     {"duration_s", stored.prompt.duration_s},
                     {"start", stored.result.span.begin},
                     {"end", stored.result.span.end}};
    }
    nlohmann::json j = {{"id", s.id}, {"seed", s.seed}, {"created_at", s.created_at}, {"prompts", prompts},
                        {"idempotency", keys}};
    if (s.motion) {
        j["motion"] = motion_file_to_json({*s.motion, {}});
    }
    return j;
}

void SessionManager::persist(const Session& s) const
{
    if (options_.persist_dir) {
        write_file_atomic(*options_.persist_dir / (s.id + ".json"), session_json(s).dump());
    }
}

void SessionManager::load_persisted()
{
    for (const fs::directory_entry& e : fs::directory_iterator(*options_.persist_dir)) {
        if (e.path().extension() != ".json") {
            continue;
        }
        const nlohmann::json j = nlohmann::json::parse(read_file(e.path()));
        auto s = std::make_shared<Session>();
        s->id = j.at("id").get<std::string>();
        s->seed = j.at("seed").get<std::uint64_t>();
        s->created_at = j.at("created_at").get<std::int64_t>();
        for (const nlohmann::json& p : j.at("prompts")) {
            s->prompts.push_back({p.at("text").get<std::string>(), p.at("duration_s").get<double>()});
            s->spans.push_back({p.at("start").get<std::size_t>(), p.at("end").get<std::size_t>()});
        }
        if (j.contains("motion")) {
            s->motion = motion_file_from_json(j.at("motion")).motion;
        }
        for (const auto& [key, v] : j.at("idempotency").items()) {
            const FrameSpan span{v.at("start").get<std::size_t>(), v.at("end").get<std::size_t>()};
            AppendResult r{span, {}};
            if (s->motion) {
                r.frames.assign(s->motion->frames().begin() + static_cast<std::ptrdiff_t>(span.begin),
                                s->motion->frames().begin() + static_cast<std::ptrdiff_t>(span.end));
            }
            s->idempotency[key] = {{v.at("text").get<std::string>(), v.at("duration_s").get<double>()}, r};
        }
        sessions_[s->id] = s;
    }
}

} // namespace mcomp
