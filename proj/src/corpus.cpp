#include "engage/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "engage/errors.hpp"

namespace engage {

void Corpus::validate() const {
    if (documents.empty())
        throw InputError("corpus: no documents");
    if (vocab_size <= 0)
        throw InputError("corpus: vocab_size must be positive");
    if (!doc_ids.empty() && doc_ids.size() != documents.size())
        throw InputError("corpus: doc_ids count does not match documents");
    for (std::size_t d = 0; d < documents.size(); ++d) {
        if (documents[d].empty())
            throw InputError("corpus: document " + std::to_string(d) + " has no tokens");
        for (int w : documents[d])
            if (w < 0 || w >= vocab_size)
                throw InputError("corpus: token id " + std::to_string(w) +
                                 " out of range in document " + std::to_string(d));
    }
}

namespace {

const std::array<const char*, 38> kStopwords = {
    "a",    "an",  "and", "are", "as",   "at",   "be",   "but", "by",   "for",
    "if",   "in",  "into", "is", "it",   "its",  "no",   "not", "of",   "on",
    "or",   "so",  "such", "that", "the", "their", "then", "there", "these",
    "they", "this", "to", "was", "we",   "were", "will", "with", "you",
};

}  // namespace

bool Tokenizer::is_stopword(const std::string& token) {
    return std::find_if(kStopwords.begin(), kStopwords.end(),
                        [&](const char* s) { return token == s; }) != kStopwords.end();
}

std::vector<std::string> Tokenizer::tokenize(const std::string& text) const {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !is_stopword(cur))
            out.push_back(cur);
        cur.clear();
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    flush();
    return out;
}

int Vocabulary::id_of(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end())
        return it->second;
    int id = static_cast<int>(tokens_.size());
    index_.emplace(token, id);
    tokens_.push_back(token);
    return id;
}

int Vocabulary::lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
}

Corpus read_token_file(const std::string& path, Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open document file: " + path);

    Tokenizer tok;
    Corpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw InputError(path + ":" + std::to_string(lineno) +
                             ": expected doc_id<TAB>tokens");
        std::string doc_id = line.substr(0, tab);
        std::vector<int> ids;
        for (const auto& t : tok.tokenize(line.substr(tab + 1)))
            ids.push_back(vocab.id_of(t));
        if (ids.empty())
            throw InputError(path + ":" + std::to_string(lineno) +
                             ": document '" + doc_id + "' has no tokens after filtering");
        corpus.doc_ids.push_back(std::move(doc_id));
        corpus.documents.push_back(std::move(ids));
    }
    corpus.vocab_size = vocab.size();
    corpus.validate();
    return corpus;
}

}  // namespace engage
