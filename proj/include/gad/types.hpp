#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace gad {

using TokenId = std::int32_t;

// A vocabulary of `size` ids; the highest id is reserved for EOS. Two
// auxiliary symbols live one past the vocabulary: the separator used when
// a prompt and response are concatenated for the discriminator, and the
// begin-of-sequence padding used inside order-m contexts. They share the
// id `size` because they never appear in the same symbol space.
struct Vocab {
    std::int32_t size = 0;

    TokenId eos() const { return size - 1; }
    TokenId sep() const { return size; }
    TokenId pad() const { return size; }

    bool operator==(const Vocab&) const = default;
};

// Hard capacity limits for prompt/response token counts.
struct SeqLimits {
    std::int32_t max_prompt_len = 2048;
    std::int32_t max_response_len = 1536;
};

// Immutable token sequence. When an EOS id is supplied at construction,
// EOS may only appear as the final token. Truncated rollouts carry no
// terminal EOS at all.
class Sequence {
public:
    static constexpr std::size_t kNoLimit = std::numeric_limits<std::size_t>::max();

    Sequence() = default;
    explicit Sequence(std::vector<TokenId> tokens, TokenId eos_id = -1,
                      std::size_t max_len = kNoLimit);

    std::size_t size() const { return tokens_.size(); }
    bool empty() const { return tokens_.empty(); }
    TokenId operator[](std::size_t i) const { return tokens_[i]; }
    const std::vector<TokenId>& tokens() const { return tokens_; }
    TokenId back() const { return tokens_.back(); }
    bool ends_with(TokenId id) const { return !tokens_.empty() && tokens_.back() == id; }

    auto begin() const { return tokens_.begin(); }
    auto end() const { return tokens_.end(); }

    bool operator==(const Sequence&) const = default;

private:
    std::vector<TokenId> tokens_;
};

// One distillation record: a prompt and the black-box teacher's response.
struct Episode {
    Sequence prompt;
    Sequence teacher_response;

    Episode() = default;  // empty placeholder, filled by slot assignment
    Episode(Sequence prompt_seq, Sequence response_seq);
};

struct DatasetMeta {
    std::string spec_id;
    std::uint64_t seed = 0;
};

// Nonempty collection of episodes over a single vocabulary.
class Dataset {
public:
    Dataset(std::vector<Episode> episodes, Vocab vocab, DatasetMeta meta);

    const std::vector<Episode>& episodes() const { return episodes_; }
    const Episode& episode(std::size_t i) const { return episodes_[i]; }
    const Vocab& vocab() const { return vocab_; }
    const DatasetMeta& meta() const { return meta_; }
    std::size_t size() const { return episodes_.size(); }

private:
    std::vector<Episode> episodes_;
    Vocab vocab_;
    DatasetMeta meta_;
};

// Builds [prompt, SEP, response] for the discriminator. The inputs are
// unmodified; a CapacityError is raised when either side exceeds its cap.
Sequence concat_prompt_response(const Sequence& prompt, const Sequence& response,
                                const Vocab& vocab, const SeqLimits& limits = {});

}  // namespace gad
