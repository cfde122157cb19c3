#include "mcomp/text/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <set>

#include "mcomp/core/motion_io.hpp"

namespace mcomp {

std::vector<std::string> split_words(std::string_view text)
{
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            out.push_back(word);
            word.clear();
        }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (text.substr(i, Vocabulary::kUnkToken.size()) == Vocabulary::kUnkToken && word.empty()) {
            // Keep the reserved token intact so detokenized output re-tokenizes.
            out.emplace_back(Vocabulary::kUnkToken);
            i += Vocabulary::kUnkToken.size() - 1;
        } else if (std::isspace(c) || c == '-' || c == '_' || c == '/') {
            flush();
        } else if (c == ',') {
            flush();
            out.emplace_back(",");
        } else if (std::isalnum(c) || c >= 0x80) {
            word += static_cast<char>(std::tolower(c));
        }
    }
    flush();
    if (out.empty()) {
        throw EmptyText("text has no words: \"" + std::string(text) + "\"");
    }
    return out;
}

Vocabulary::Vocabulary() : tokens_{std::string(kPadToken), std::string(kUnkToken)}
{
    index_[tokens_[0]] = kPad;
    index_[tokens_[1]] = kUnk;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens)
{
    if (tokens.size() < 2 || tokens[kPad] != kPadToken || tokens[kUnk] != kUnkToken) {
        throw FormatError("vocabulary must start with \"<pad>\", \"<unk>\"");
    }
    Vocabulary v;
    v.tokens_ = std::move(tokens);
    v.index_.clear();
    for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
        if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second) {
            throw FormatError("duplicate vocabulary token \"" + v.tokens_[i] + "\"");
        }
    }
    return v;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts)
{
    std::set<std::string> words;
    for (const std::string& t : texts) {
        for (std::string& w : split_words(t)) {
            if (w != kUnkToken && w != ",") {
                words.insert(std::move(w));
            }
        }
    }
    std::vector<std::string> tokens{std::string(kPadToken), std::string(kUnkToken), ","};
    tokens.insert(tokens.end(), words.begin(), words.end());
    return from_tokens(std::move(tokens));
}

int Vocabulary::id_of(const std::string& word) const
{
    auto it = index_.find(word);
    return it == index_.end() ? kUnk : it->second;
}

TokenSequence Vocabulary::tokenize(std::string_view text) const
{
    TokenSequence out;
    for (const std::string& w : split_words(text)) {
        out.ids.push_back(id_of(w));
    }
    return out;
}

std::string Vocabulary::detokenize(const TokenSequence& tokens) const
{
    std::string out;
    for (int id : tokens.ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
            throw std::out_of_range("token id " + std::to_string(id) + " outside the vocabulary");
        }
        if (!out.empty()) {
            out += ' ';
        }
        out += tokens_[static_cast<std::size_t>(id)];
    }
    return out;
}

std::string Vocabulary::hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const std::string& t : tokens_) {
        for (unsigned char c : t) {
            h = (h ^ c) * 0x100000001b3ULL;
        }
        h = (h ^ 0xffU) * 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string Vocabulary::to_json() const
{
    return nlohmann::json{{"tokens", tokens_}}.dump(2);
}

Vocabulary Vocabulary::from_json(std::string_view json)
{
    try {
        return from_tokens(nlohmann::json::parse(json).at("tokens").get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("vocabulary: ") + e.what());
    }
}

void Vocabulary::save(const std::filesystem::path& path) const
{
    write_file_atomic(path, to_json());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path)
{
    return from_json(read_file(path));
}

} // namespace mcomp
