#include "mcomp/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <nlohmann/json.hpp>

#include "mcomp/core/motion_io.hpp"

namespace mcomp {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'M', 'C', 'K', 'P'};

std::uint64_t fnv1a(const char* data, std::size_t n)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h = (h ^ static_cast<unsigned char>(data[i])) * 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
void put(std::string& out, T v)
{
    out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(const std::string& in, std::size_t& pos)
{
    if (pos + sizeof(T) > in.size()) {
        throw CorruptCheckpoint("checkpoint truncated");
    }
    T v;
    std::memcpy(&v, in.data() + pos, sizeof v);
    pos += sizeof v;
    return v;
}

nlohmann::json stats_json(const FeatureStats& s)
{
    return {{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
            {"std", std::vector<double>(s.std.data(), s.std.data() + s.std.size())}};
}

FeatureStats stats_from(const nlohmann::json& j)
{
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto std = j.at("std").get<std::vector<double>>();
    if (mean.size() != std.size()) {
        throw CorruptCheckpoint("feature stats size mismatch");
    }
    FeatureStats s;
    s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    s.std = Eigen::Map<const Eigen::VectorXd>(std.data(), static_cast<Eigen::Index>(std.size()));
    return s;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const TeachModel& model, const nn::AdamW* optimizer,
                     const TrainingState& state)
{
    nlohmann::json header;
    header["config"] = to_json(model.config());
    header["strategy"] = to_string(model.strategy());
    header["vocabulary"] = model.vocabulary().tokens();
    header["vocabulary_hash"] = model.vocabulary().hash();
    header["stats"] = stats_json(model.stats());
    header["skeleton"] = skeleton_to_json(*model.skeleton());
    header["state"] = {{"epoch", state.epoch},
                       {"step", state.step},
                       {"best_val_ape", std::isfinite(state.best_val_ape) ? nlohmann::json(state.best_val_ape)
                                                                          : nlohmann::json(nullptr)},
                       {"seed", state.seed}};

    std::string blob;
    nlohmann::json tensors = nlohmann::json::array();
    auto add_tensor = [&](const std::string& name, const nn::Mat& m) {
        tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", blob.size()}});
        blob.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
    };
    for (const nn::Parameter& p : model.parameters().all()) {
        add_tensor(p.name, p.value);
    }
    if (optimizer != nullptr) {
        header["optimizer"] = {{"lr", optimizer->config().lr},
                               {"beta1", optimizer->config().beta1},
                               {"beta2", optimizer->config().beta2},
                               {"eps", optimizer->config().eps},
                               {"weight_decay", optimizer->config().weight_decay},
                               {"steps", optimizer->steps()}};
        for (const auto& [name, m] : optimizer->first_moments()) {
            add_tensor("adam.m/" + name, m);
        }
        for (const auto& [name, v] : optimizer->second_moments()) {
            add_tensor("adam.v/" + name, v);
        }
    }
    header["tensors"] = tensors;

    const std::string header_text = header.dump();
    std::string out(kMagic, 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, header_text.size());
    out += header_text;
    put<std::uint64_t>(out, blob.size());
    out += blob;
    put<std::uint64_t>(out, fnv1a(out.data(), out.size()));
    write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::string in;
    try {
        in = read_file(path);
    } catch (const std::exception& e) {
        throw CorruptCheckpoint(e.what());
    }
    if (in.size() < 4 + 4 + 8 + 8 + 8 || std::memcmp(in.data(), kMagic, 4) != 0) {
        throw CorruptCheckpoint(path.string() + ": not a checkpoint (bad magic)");
    }
    std::size_t tail = in.size() - 8;
    std::uint64_t stored;
    std::memcpy(&stored, in.data() + tail, 8);
    if (stored != fnv1a(in.data(), tail)) {
        throw CorruptCheckpoint(path.string() + ": checksum mismatch (file is corrupt or truncated)");
    }
    std::size_t pos = 4;
    const auto version = get<std::uint32_t>(in, pos);
    if (version != kCheckpointVersion) {
        throw CorruptCheckpoint(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    const auto header_len = get<std::uint64_t>(in, pos);
    if (pos + header_len > tail) {
        throw CorruptCheckpoint("checkpoint header truncated");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(in.substr(pos, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw CorruptCheckpoint(std::string("checkpoint header: ") + e.what());
    }
    pos += header_len;
    const auto blob_len = get<std::uint64_t>(in, pos);
    if (pos + blob_len != tail) {
        throw CorruptCheckpoint("checkpoint tensor block has the wrong size");
    }
    const char* blob = in.data() + pos;

    try {
        Vocabulary vocab = Vocabulary::from_tokens(header.at("vocabulary").get<std::vector<std::string>>());
        if (vocab.hash() != header.at("vocabulary_hash").get<std::string>()) {
            throw CorruptCheckpoint("vocabulary hash mismatch");
        }
        auto skeleton = std::make_shared<const Skeleton>(skeleton_from_json(header.at("skeleton")));
        Checkpoint ck;
        ck.model = std::make_unique<TeachModel>(model_config_from_json(header.at("config")),
                                                strategy_from_string(header.at("strategy").get<std::string>()),
                                                std::move(vocab), stats_from(header.at("stats")), skeleton, 0);
        std::map<std::string, nn::Mat> tensors;
        for (const auto& t : header.at("tensors")) {
            const auto rows = t.at("rows").get<Eigen::Index>();
            const auto cols = t.at("cols").get<Eigen::Index>();
            const auto offset = t.at("offset").get<std::uint64_t>();
            const std::uint64_t bytes = static_cast<std::uint64_t>(rows * cols) * sizeof(double);
            if (rows < 0 || cols < 0 || offset + bytes > blob_len) {
                throw CorruptCheckpoint("tensor " + t.at("name").get<std::string>() + " out of range");
            }
            nn::Mat m(rows, cols);
            std::memcpy(m.data(), blob + offset, bytes);
            tensors[t.at("name").get<std::string>()] = std::move(m);
        }
        for (nn::Parameter& p : ck.model->parameters().all()) {
            auto it = tensors.find(p.name);
            if (it == tensors.end()) {
                throw CorruptCheckpoint("missing tensor " + p.name);
            }
            if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols()) {
                throw CorruptCheckpoint("tensor " + p.name + " has the wrong shape");
            }
            p.value = it->second;
        }
        if (header.contains("optimizer")) {
            const auto& o = header.at("optimizer");
            ck.optimizer = nn::AdamW({o.at("lr").get<double>(), o.at("beta1").get<double>(),
                                      o.at("beta2").get<double>(), o.at("eps").get<double>(),
                                      o.at("weight_decay").get<double>()});
            ck.optimizer.set_steps(o.at("steps").get<std::int64_t>());
            for (auto& [name, m] : tensors) {
                if (name.rfind("adam.m/", 0) == 0) {
                    ck.optimizer.first_moments()[name.substr(7)] = m;
                } else if (name.rfind("adam.v/", 0) == 0) {
                    ck.optimizer.second_moments()[name.substr(7)] = m;
                }
            }
        } else {
            const ModelConfig& c = ck.model->config();
            ck.optimizer = nn::AdamW({.lr = c.learning_rate, .weight_decay = c.weight_decay});
        }
        const auto& s = header.at("state");
        ck.state.epoch = s.at("epoch").get<std::int64_t>();
        ck.state.step = s.at("step").get<std::int64_t>();
        ck.state.best_val_ape = s.at("best_val_ape").is_null() ? std::numeric_limits<double>::infinity()
                                                                 : s.at("best_val_ape").get<double>();
        ck.state.seed = s.at("seed").get<std::uint64_t>();
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptCheckpoint(std::string("checkpoint header: ") + e.what());
    } catch (const FormatError& e) {
        throw CorruptCheckpoint(std::string("checkpoint header: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw CorruptCheckpoint(std::string("checkpoint header: ") + e.what());
    }
}

} // namespace mcomp
