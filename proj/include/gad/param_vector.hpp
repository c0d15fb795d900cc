#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace gad {

struct ParamSegment {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index length = 0;
};

// Flat 64-bit parameter vector with a named-segment map. Segments are
// disjoint, laid out in declaration order, and cover the whole vector.
class ParamVector {
public:
    ParamVector() = default;
    ParamVector(Eigen::VectorXd values, std::vector<ParamSegment> segments);

    // Zero-initialized vector from (name, length) pairs.
    static ParamVector zeros(const std::vector<std::pair<std::string, Eigen::Index>>& layout);

    Eigen::VectorXd& values() { return values_; }
    const Eigen::VectorXd& values() const { return values_; }
    Eigen::Index size() const { return values_.size(); }

    const std::vector<ParamSegment>& segments() const { return segments_; }
    const ParamSegment& segment_info(std::string_view name) const;
    bool has_segment(std::string_view name) const;

    Eigen::Ref<Eigen::VectorXd> segment(std::string_view name);
    Eigen::Ref<const Eigen::VectorXd> segment(std::string_view name) const;

    bool same_layout(const ParamVector& other) const;

    // Like-shaped vector with all entries zero.
    ParamVector zeros_like() const;

private:
    Eigen::VectorXd values_;
    std::vector<ParamSegment> segments_;
};

}  // namespace gad
