#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dicca/matrix.hpp"

namespace dicca {

// M aligned views; row n of every view is the same sample.
struct MultiViewDataset {
    std::vector<Matrix> views;
    std::optional<std::vector<int>> labels;
    std::vector<std::string> view_names;
    std::string provenance;

    std::size_t samples() const noexcept { return views.empty() ? 0 : views.front().rows(); }
    std::size_t view_count() const noexcept { return views.size(); }

    // Throws ShapeMismatch if views disagree on N, labels have the wrong
    // length, or names are present for only some views.
    void validate() const;

    // Same rows of every view (and label), in the given order.
    MultiViewDataset subset(std::span<const std::size_t> rows) const;

    friend bool operator==(const MultiViewDataset&, const MultiViewDataset&) = default;
};

}  // namespace dicca
