#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mcomp {

class EmptyText : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Lowercased words of `text`. Commas become their own token, '-', '_' and
// '/' separate words, other punctuation is dropped. Throws EmptyText when
// nothing remains.
std::vector<std::string> split_words(std::string_view text);

struct TokenSequence {
    std::vector<int> ids;
    bool operator==(const TokenSequence&) const = default;
};

class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr std::string_view kPadToken = "<pad>";
    static constexpr std::string_view kUnkToken = "<unk>";

    // Only the reserved tokens.
    Vocabulary();
    // Reserved tokens, ",", then the sorted distinct words of `texts`.
    static Vocabulary build(const std::vector<std::string>& texts);
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    TokenSequence tokenize(std::string_view text) const;
    std::string detokenize(const TokenSequence& tokens) const;

    int id_of(const std::string& word) const;
    const std::vector<std::string>& tokens() const { return tokens_; }
    std::size_t size() const { return tokens_.size(); }
    // FNV-1a over the token list; identifies the id assignment.
    std::string hash() const;

    std::string to_json() const;
    static Vocabulary from_json(std::string_view json);
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

private:
    std::vector<std::string> tokens_;
    std::map<std::string, int> index_;
};

} // namespace mcomp
