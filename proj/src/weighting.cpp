#include "lmfrank/weighting.hpp"

#include <algorithm>
#include <cmath>

#include "lmfrank/error.hpp"

namespace lmfrank {

std::string_view to_string(WeightKind kind) {
    switch (kind) {
        case WeightKind::uniform:
            return "uniform";
        case WeightKind::linear:
            return "linear";
        case WeightKind::loglinear:
            return "loglinear";
    }
    return "unknown";
}

WeightKind parse_weight_kind(std::string_view text) {
    if (text == "uniform") {
        return WeightKind::uniform;
    }
    if (text == "linear") {
        return WeightKind::linear;
    }
    if (text == "loglinear") {
        return WeightKind::loglinear;
    }
    throw InputError("unknown weight scheme '" + std::string(text) +
                     "' (expected uniform, linear or loglinear)");
}

void WeightScheme::validate() const {
    if (!std::isfinite(c) || c <= 0.0) {
        throw InputError("importance weight c must be positive and finite");
    }
}

double WeightScheme::positive_weight(double confidence) const {
    switch (kind) {
        case WeightKind::uniform:
            return c;
        case WeightKind::linear:
            return 1.0 + c * confidence;
        case WeightKind::loglinear:
            return 1.0 + c * std::log1p(confidence);
    }
    return c;
}

WeightView::WeightView(const InteractionStore& store, WeightScheme scheme)
    : store_(&store), scheme_(scheme) {
    scheme_.validate();
    const std::size_t m = store.entity_count();
    offsets_.assign(m + 1, 0);
    for (EntityId i = 0; i < m; ++i) {
        offsets_[i + 1] = offsets_[i] + store.partners(i).size();
    }
    weighted_.reserve(offsets_[m]);
    for (EntityId i = 0; i < m; ++i) {
        for (const Partner& p : store.partners(i)) {
            weighted_.push_back(Partner{p.id, scheme_.positive_weight(p.value)});
        }
    }
}

double WeightView::weight_of(EntityId i, EntityId j) const {
    if (i == j) {
        return 0.0;
    }
    const auto row = positives(i);
    auto it = std::lower_bound(row.begin(), row.end(), j,
                               [](const Partner& p, EntityId id) { return p.id < id; });
    if (it != row.end() && it->id == j) {
        return it->value;
    }
    return 1.0;
}

std::span<const Partner> WeightView::positives(EntityId i) const {
    return std::span<const Partner>(weighted_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

}  // namespace lmfrank
