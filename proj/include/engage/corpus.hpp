#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace engage {

// Pre-tokenized short-text collection. Token ids are dense in [0, vocab_size).
struct Corpus {
    std::vector<std::vector<int>> documents;
    int vocab_size = 0;
    std::vector<std::string> doc_ids;

    std::size_t size() const { return documents.size(); }

    // Throws InputError on empty corpus, empty documents, vocab_size == 0,
    // or out-of-range token ids.
    void validate() const;
};

// Minimal tokenizer for the synthetic pipeline: lowercase, whitespace split,
// small built-in English stopword list. Real short-text corpora are expected
// to arrive already tokenized and stemmed; this does not replicate any
// production preprocessing.
class Tokenizer {
public:
    // Returns surviving tokens of one raw line of text.
    std::vector<std::string> tokenize(const std::string& text) const;

    static bool is_stopword(const std::string& token);
};

// Incremental token -> dense id mapping.
class Vocabulary {
public:
    int id_of(const std::string& token);          // inserts if absent
    int lookup(const std::string& token) const;   // -1 if absent
    int size() const { return static_cast<int>(tokens_.size()); }
    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::unordered_map<std::string, int> index_;
    std::vector<std::string> tokens_;
};

// Reads `doc_id<TAB>space-separated tokens` lines, applying the tokenizer
// and building the vocabulary in first-occurrence order.
Corpus read_token_file(const std::string& path, Vocabulary& vocab);

}  // namespace engage
