#include "dicca/dataset.hpp"

#include <string>

#include "dicca/errors.hpp"

namespace dicca {

void MultiViewDataset::validate() const {
    if (views.empty()) throw ShapeMismatch("dataset has no views");
    const std::size_t n = views.front().rows();
    for (std::size_t m = 0; m < views.size(); ++m) {
        if (views[m].rows() != n)
            throw ShapeMismatch("view " + std::to_string(m) + " has " + std::to_string(views[m].rows()) +
                                " samples, view 0 has " + std::to_string(n));
        if (views[m].cols() == 0) throw ShapeMismatch("view " + std::to_string(m) + " has no features");
    }
    if (labels && labels->size() != n)
        throw ShapeMismatch("labels have length " + std::to_string(labels->size()) + ", expected " +
                            std::to_string(n));
    if (!view_names.empty() && view_names.size() != views.size())
        throw ShapeMismatch("view names do not match the view count");
}

MultiViewDataset MultiViewDataset::subset(std::span<const std::size_t> rows) const {
    MultiViewDataset out;
    out.view_names = view_names;
    out.provenance = provenance;
    out.views.reserve(views.size());
    for (const auto& v : views) out.views.push_back(take_rows(v, rows));
    if (labels) {
        std::vector<int> l(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) l[i] = (*labels)[rows[i]];
        out.labels = std::move(l);
    }
    return out;
}

}  // namespace dicca
