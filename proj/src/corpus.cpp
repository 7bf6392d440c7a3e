#include "datascale/corpus.hpp"
#include "datascale/error.hpp"
#include "datascale/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace datascale {

namespace {

constexpr std::string_view kAlphabet =
    "!\"#$%&'()*+,-./0123456789:;<=>?@ABCDEFGHIJKLMNOPQRSTUVWXYZ[\\]^_`abcdefghijklmnopqrstuvwxyz{|}~";
static_assert(kAlphabet.size() == 94);

struct Scalar {
    char32_t code;
    std::size_t length;
};

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one UTF-8 scalar at `pos`. Malformed input yields a 1-byte unit
// with code kInvalid so that byte sequences survive untouched.
Scalar decode(std::string_view s, std::size_t pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) return {b0, 1};
    std::size_t len;
    char32_t code;
    char32_t min;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        code = b0 & 0x1F;
        min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        code = b0 & 0x0F;
        min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        code = b0 & 0x07;
        min = 0x10000;
    } else {
        return {kInvalid, 1};
    }
    if (pos + len > s.size()) return {kInvalid, 1};
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[pos + k]);
        if ((b & 0xC0) != 0x80) return {kInvalid, 1};
        code = (code << 6) | (b & 0x3F);
    }
    if (code < min || code > 0x10FFFF || (code >= 0xD800 && code <= 0xDFFF)) return {kInvalid, 1};
    return {code, len};
}

// Unicode White_Space property.
bool is_space(char32_t c) {
    return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
           (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
           c == 0x205F || c == 0x3000;
}

std::string& side_of(SentencePair& pair, Side side) {
    return side == Side::source ? pair.source : pair.target;
}

void check_kind(const CorruptionSpec& spec, CorruptionKind expected) {
    validate(spec);
    if (spec.kind != expected) throw Error(ErrorKind::domain, "corruption kind does not match operation");
}

std::string format_score(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

void validate(const CorruptionSpec& spec) {
    if (!(spec.prob >= 0.0 && spec.prob <= 1.0))
        throw Error(ErrorKind::domain, "corruption probability must lie in [0, 1]");
}

std::string_view replacement_alphabet() { return kAlphabet; }

std::size_t count_chars(std::string_view text) {
    std::size_t n = 0;
    for (std::size_t pos = 0; pos < text.size(); pos += decode(text, pos).length) ++n;
    return n;
}

std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> words;
    std::size_t start = std::string_view::npos;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto sc = decode(text, pos);
        if (is_space(sc.code)) {
            if (start != std::string_view::npos) {
                words.push_back(text.substr(start, pos - start));
                start = std::string_view::npos;
            }
        } else if (start == std::string_view::npos) {
            start = pos;
        }
        pos += sc.length;
    }
    if (start != std::string_view::npos) words.push_back(text.substr(start));
    return words;
}

SentencePair corrupt_chars(const SentencePair& pair, const CorruptionSpec& spec) {
    check_kind(spec, CorruptionKind::char_noise);
    SentencePair out = pair;
    if (spec.prob == 0.0) return out;
    const std::string& text = spec.side == Side::source ? pair.source : pair.target;
    auto rng = stream_for(spec.seed, pair.index);
    std::string noisy;
    noisy.reserve(text.size());
    for (std::size_t pos = 0; pos < text.size();) {
        const auto sc = decode(text, pos);
        if (rng.uniform() < spec.prob) {
            noisy.push_back(kAlphabet[rng.below(kAlphabet.size())]);
        } else {
            noisy.append(text, pos, sc.length);
        }
        pos += sc.length;
    }
    side_of(out, spec.side) = std::move(noisy);
    return out;
}

std::vector<SentencePair> corrupt_chars(std::span<const SentencePair> pairs, const CorruptionSpec& spec) {
    std::vector<SentencePair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(corrupt_chars(p, spec));
    return out;
}

SentencePair delete_words(const SentencePair& pair, const CorruptionSpec& spec) {
    check_kind(spec, CorruptionKind::word_delete);
    SentencePair out = pair;
    const std::string& text = spec.side == Side::source ? pair.source : pair.target;
    auto rng = stream_for(spec.seed, pair.index);
    std::string kept;
    for (const auto word : split_words(text)) {
        if (rng.uniform() < spec.prob) continue;
        if (!kept.empty()) kept.push_back(' ');
        kept.append(word);
    }
    side_of(out, spec.side) = std::move(kept);
    return out;
}

std::vector<SentencePair> delete_words(std::span<const SentencePair> pairs, const CorruptionSpec& spec) {
    std::vector<SentencePair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(delete_words(p, spec));
    return out;
}

std::vector<SentencePair> shuffle_pairs(std::span<const SentencePair> pairs, const CorruptionSpec& spec) {
    check_kind(spec, CorruptionKind::pair_shuffle);
    std::vector<SentencePair> out(pairs.begin(), pairs.end());
    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (stream_for(spec.seed, pairs[i].index).uniform() < spec.prob) selected.push_back(i);
    }
    if (selected.size() < 2) return out;
    for (std::size_t j = 0; j < selected.size(); ++j)
        out[selected[j]].target = pairs[selected[(j + 1) % selected.size()]].target;
    return out;
}

std::vector<SentencePair> corrupt(std::span<const SentencePair> pairs, const CorruptionSpec& spec) {
    switch (spec.kind) {
    case CorruptionKind::char_noise: return corrupt_chars(pairs, spec);
    case CorruptionKind::word_delete: return delete_words(pairs, spec);
    case CorruptionKind::pair_shuffle: return shuffle_pairs(pairs, spec);
    }
    throw Error(ErrorKind::domain, "unknown corruption kind");
}

std::vector<SentencePair> filter_top_fraction(std::span<const SentencePair> pairs, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorKind::domain, "fraction must lie in (0, 1]");
    for (const auto& p : pairs) {
        if (!p.score || std::isnan(*p.score)) {
            std::ostringstream os;
            os << "pair " << p.index << " has no score";
            throw Error(ErrorKind::schema, os.str());
        }
    }
    const auto n = pairs.size();
    const auto keep = static_cast<std::size_t>(
        std::clamp(std::ceil(fraction * static_cast<double>(n) - 1e-9), 0.0, static_cast<double>(n)));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (*pairs[a].score != *pairs[b].score) return *pairs[a].score > *pairs[b].score;
        return pairs[a].index < pairs[b].index;
    });
    order.resize(keep);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pairs[a].index < pairs[b].index; });

    std::vector<SentencePair> out;
    out.reserve(keep);
    for (auto i : order) out.push_back(pairs[i]);
    return out;
}

SubsetSampler::SubsetSampler(std::size_t size, std::uint64_t seed) : size_(size), seed_(seed) {
    if (size == 0) throw Error(ErrorKind::domain, "sample size must be positive");
}

void SubsetSampler::offer(const SentencePair& pair) {
    ++seen_;
    const auto before = [](const Entry& a, const Entry& b) {
        return a.key != b.key ? a.key < b.key : a.pair.index < b.pair.index;
    };
    Entry entry{derive_seed(seed_, pair.index), pair};
    if (heap_.size() < size_) {
        heap_.push_back(std::move(entry));
        std::push_heap(heap_.begin(), heap_.end(), before);
    } else if (before(entry, heap_.front())) {
        std::pop_heap(heap_.begin(), heap_.end(), before);
        heap_.back() = std::move(entry);
        std::push_heap(heap_.begin(), heap_.end(), before);
    }
}

std::vector<SentencePair> SubsetSampler::take() && {
    if (seen_ < size_) {
        std::ostringstream os;
        os << "sample size " << size_ << " exceeds corpus size " << seen_;
        throw Error(ErrorKind::domain, os.str());
    }
    std::sort(heap_.begin(), heap_.end(),
              [](const Entry& a, const Entry& b) { return a.pair.index < b.pair.index; });
    std::vector<SentencePair> out;
    out.reserve(heap_.size());
    for (auto& e : heap_) out.push_back(std::move(e.pair));
    heap_.clear();
    return out;
}

std::vector<SentencePair> sample_subset(std::span<const SentencePair> pairs, std::size_t size,
                                        std::uint64_t seed) {
    SubsetSampler sampler(size, seed);
    for (const auto& p : pairs) sampler.offer(p);
    return std::move(sampler).take();
}

std::optional<SentencePair> CorpusReader::next() {
    if (!std::getline(in_, buffer_)) return std::nullopt;
    ++line_;
    std::vector<std::string_view> fields;
    std::string_view rest(buffer_);
    for (;;) {
        const auto tab = rest.find('\t');
        fields.push_back(rest.substr(0, tab));
        if (tab == std::string_view::npos) break;
        rest.remove_prefix(tab + 1);
    }
    if (fields.size() != 2 && fields.size() != 3) {
        std::ostringstream os;
        os << "line " << line_ << ": expected 2 or 3 TAB-separated fields, got " << fields.size();
        throw Error(ErrorKind::parse, os.str());
    }
    SentencePair pair;
    pair.source = fields[0];
    pair.target = fields[1];
    pair.index = line_ - 1;
    if (fields.size() == 3) {
        double v = 0.0;
        const auto f = fields[2];
        const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
        if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
            std::ostringstream os;
            os << "line " << line_ << ": score '" << f << "' is not a decimal number";
            throw Error(ErrorKind::parse, os.str());
        }
        pair.score = v;
        pair.score_text = f;
    }
    return pair;
}

std::vector<SentencePair> read_corpus(std::istream& in) {
    CorpusReader reader(in);
    std::vector<SentencePair> pairs;
    while (auto p = reader.next()) pairs.push_back(std::move(*p));
    return pairs;
}

void write_pair(std::ostream& out, const SentencePair& pair) {
    out << pair.source << '\t' << pair.target;
    if (pair.score) out << '\t' << (pair.score_text.empty() ? format_score(*pair.score) : pair.score_text);
    out << '\n';
}

void write_corpus(std::ostream& out, std::span<const SentencePair> pairs) {
    for (const auto& p : pairs) write_pair(out, p);
}

}  // namespace datascale
