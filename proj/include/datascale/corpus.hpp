#pragma once

// Deterministic parallel-corpus operations: noise injection, top-fraction
// filtering by an external score, and seeded subset sampling.
//
// Randomness for pair i comes only from (seed, i), so per-pair operations give
// the same output regardless of chunking, order, or threading.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace datascale {

struct SentencePair {
    std::string source;
    std::string target;
    std::optional<double> score;
    std::string score_text;  // literal as read, written back verbatim
    std::uint64_t index = 0;
};

enum class CorruptionKind { char_noise, word_delete, pair_shuffle };
enum class Side { source, target };

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::char_noise;
    Side side = Side::source;
    double prob = 0.1;
    std::uint64_t seed = 0;
};

void validate(const CorruptionSpec& spec);

// Printable ASCII without space (codes 33..126): [a-zA-Z0-9] plus the 32
// punctuation characters.
std::string_view replacement_alphabet();

// Replaces each Unicode scalar value on the chosen side with probability
// `prob` by a uniform draw from replacement_alphabet(). Draws may coincide
// with the original character.
SentencePair corrupt_chars(const SentencePair& pair, const CorruptionSpec& spec);
std::vector<SentencePair> corrupt_chars(std::span<const SentencePair> pairs, const CorruptionSpec& spec);

// Splits the chosen side on runs of Unicode whitespace, drops each word with
// probability `prob`, and rejoins survivors with single spaces.
SentencePair delete_words(const SentencePair& pair, const CorruptionSpec& spec);
std::vector<SentencePair> delete_words(std::span<const SentencePair> pairs, const CorruptionSpec& spec);

// Selects pairs by independent coin flips and rotates the targets of the
// selected subsequence by one position. Sources never move.
std::vector<SentencePair> shuffle_pairs(std::span<const SentencePair> pairs, const CorruptionSpec& spec);

// Dispatches on spec.kind.
std::vector<SentencePair> corrupt(std::span<const SentencePair> pairs, const CorruptionSpec& spec);

// The ceil(fraction * n) highest-scoring pairs in corpus order; ties at the
// cutoff go to the lower index.
std::vector<SentencePair> filter_top_fraction(std::span<const SentencePair> pairs, double fraction);

// Uniform sample without replacement. Each pair gets a priority key from
// (seed, index) and the `size` smallest keys are kept, so the result does not
// depend on how the stream is chunked.
class SubsetSampler {
public:
    SubsetSampler(std::size_t size, std::uint64_t seed);

    void offer(const SentencePair& pair);
    std::size_t seen() const { return seen_; }

    // Sorted by original index. Throws Error(domain) if fewer than `size`
    // pairs were offered.
    std::vector<SentencePair> take() &&;

private:
    struct Entry {
        std::uint64_t key;
        SentencePair pair;
    };
    std::size_t size_;
    std::uint64_t seed_;
    std::size_t seen_ = 0;
    std::vector<Entry> heap_;  // max-heap on (key, index)
};

std::vector<SentencePair> sample_subset(std::span<const SentencePair> pairs, std::size_t size,
                                        std::uint64_t seed);

// TAB-separated corpus I/O: source \t target [\t score], one pair per line.
// Throws Error(parse) naming the 1-based line on malformed input.
class CorpusReader {
public:
    explicit CorpusReader(std::istream& in) : in_(in) {}
    std::optional<SentencePair> next();

private:
    std::istream& in_;
    std::uint64_t line_ = 0;
    std::string buffer_;
};

std::vector<SentencePair> read_corpus(std::istream& in);
void write_pair(std::ostream& out, const SentencePair& pair);
void write_corpus(std::ostream& out, std::span<const SentencePair> pairs);

// Number of Unicode scalar values (malformed bytes count one each).
std::size_t count_chars(std::string_view text);
// Words separated by runs of Unicode whitespace.
std::vector<std::string_view> split_words(std::string_view text);

}  // namespace datascale
