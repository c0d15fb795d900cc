#include "gad/param_vector.hpp"

#include <set>

#include "gad/error.hpp"

namespace gad {

ParamVector::ParamVector(Eigen::VectorXd values, std::vector<ParamSegment> segments)
    : values_(std::move(values)), segments_(std::move(segments)) {
    Eigen::Index expected = 0;
    std::set<std::string> names;
    for (const ParamSegment& seg : segments_) {
        if (seg.offset != expected) {
            throw ArgumentError("ParamVector: segment '" + seg.name + "' leaves a gap");
        }
        if (seg.length <= 0) {
            throw ArgumentError("ParamVector: segment '" + seg.name + "' has no elements");
        }
        if (!names.insert(seg.name).second) {
            throw ArgumentError("ParamVector: duplicate segment name '" + seg.name + "'");
        }
        expected += seg.length;
    }
    if (expected != values_.size()) {
        throw ArgumentError("ParamVector: segments cover " + std::to_string(expected) +
                            " of " + std::to_string(values_.size()) + " values");
    }
    if (!values_.allFinite()) {
        throw ArgumentError("ParamVector: non-finite value");
    }
}

ParamVector ParamVector::zeros(const std::vector<std::pair<std::string, Eigen::Index>>& layout) {
    std::vector<ParamSegment> segments;
    Eigen::Index total = 0;
    for (const auto& [name, length] : layout) {
        segments.push_back({name, total, length});
        total += length;
    }
    return ParamVector(Eigen::VectorXd::Zero(total), std::move(segments));
}

const ParamSegment& ParamVector::segment_info(std::string_view name) const {
    for (const ParamSegment& seg : segments_) {
        if (seg.name == name) return seg;
    }
    throw ArgumentError("ParamVector: no segment named '" + std::string(name) + "'");
}

bool ParamVector::has_segment(std::string_view name) const {
    for (const ParamSegment& seg : segments_) {
        if (seg.name == name) return true;
    }
    return false;
}

Eigen::Ref<Eigen::VectorXd> ParamVector::segment(std::string_view name) {
    const ParamSegment& seg = segment_info(name);
    return values_.segment(seg.offset, seg.length);
}

Eigen::Ref<const Eigen::VectorXd> ParamVector::segment(std::string_view name) const {
    const ParamSegment& seg = segment_info(name);
    return values_.segment(seg.offset, seg.length);
}

bool ParamVector::same_layout(const ParamVector& other) const {
    if (segments_.size() != other.segments_.size()) return false;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const ParamSegment& a = segments_[i];
        const ParamSegment& b = other.segments_[i];
        if (a.name != b.name || a.offset != b.offset || a.length != b.length) return false;
    }
    return true;
}

ParamVector ParamVector::zeros_like() const {
    return ParamVector(Eigen::VectorXd::Zero(values_.size()), segments_);
}

}  // namespace gad
