#include "gad/types.hpp"

#include "gad/error.hpp"

namespace gad {

Sequence::Sequence(std::vector<TokenId> tokens, TokenId eos_id, std::size_t max_len)
    : tokens_(std::move(tokens)) {
    if (tokens_.size() > max_len) {
        throw CapacityError("Sequence: length " + std::to_string(tokens_.size()) +
                            " exceeds limit " + std::to_string(max_len));
    }
    if (eos_id >= 0) {
        for (std::size_t i = 0; i + 1 < tokens_.size(); ++i) {
            if (tokens_[i] == eos_id) {
                throw ArgumentError("Sequence: EOS at non-final position " + std::to_string(i));
            }
        }
    }
}

Episode::Episode(Sequence prompt_seq, Sequence response_seq)
    : prompt(std::move(prompt_seq)), teacher_response(std::move(response_seq)) {
    if (teacher_response.empty()) {
        throw ArgumentError("Episode: teacher response must be nonempty");
    }
}

Dataset::Dataset(std::vector<Episode> episodes, Vocab vocab, DatasetMeta meta)
    : episodes_(std::move(episodes)), vocab_(vocab), meta_(std::move(meta)) {
    if (episodes_.empty()) throw ArgumentError("Dataset: no episodes");
    if (vocab_.size < 2) throw ArgumentError("Dataset: vocabulary needs at least two ids");
    auto check = [&](const Sequence& seq, bool is_response) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            const TokenId t = seq[i];
            if (t < 0 || t >= vocab_.size) {
                throw ArgumentError("Dataset: token " + std::to_string(t) +
                                    " outside vocabulary of size " + std::to_string(vocab_.size));
            }
            if (t == vocab_.eos() && i + 1 < seq.size()) {
                throw ArgumentError("Dataset: EOS at non-final position");
            }
            (void)is_response;
        }
    };
    for (const Episode& ep : episodes_) {
        check(ep.prompt, false);
        check(ep.teacher_response, true);
    }
}

Sequence concat_prompt_response(const Sequence& prompt, const Sequence& response,
                                const Vocab& vocab, const SeqLimits& limits) {
    if (prompt.size() > static_cast<std::size_t>(limits.max_prompt_len)) {
        throw CapacityError("concat_prompt_response: prompt length " +
                            std::to_string(prompt.size()) + " exceeds cap " +
                            std::to_string(limits.max_prompt_len));
    }
    if (response.size() > static_cast<std::size_t>(limits.max_response_len)) {
        throw CapacityError("concat_prompt_response: response length " +
                            std::to_string(response.size()) + " exceeds cap " +
                            std::to_string(limits.max_response_len));
    }
    std::vector<TokenId> joined;
    joined.reserve(prompt.size() + 1 + response.size());
    joined.insert(joined.end(), prompt.begin(), prompt.end());
    joined.push_back(vocab.sep());
    joined.insert(joined.end(), response.begin(), response.end());
    return Sequence(std::move(joined), vocab.eos());
}

}  // namespace gad
