#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmfrank/data.hpp"

namespace lmfrank {

enum class WeightKind { uniform, linear, loglinear };

std::string_view to_string(WeightKind kind);
WeightKind parse_weight_kind(std::string_view text);  // throws InputError

// Importance given to a known positive pair:
//   uniform    c_ij = c
//   linear     c_ij = 1 + c * eps_ij
//   loglinear  c_ij = 1 + c * ln(1 + eps_ij)
struct WeightScheme {
    WeightKind kind = WeightKind::uniform;
    double c = 50.0;

    void validate() const;  // c must be finite and > 0
    double positive_weight(double confidence) const;
};

// Read-only view of the weight matrix W over an interaction store:
// w_ii = 0, w_ij = c_ij for positives, 1 for every other off-diagonal pair.
// Only the positive entries are held; the store must outlive the view.
class WeightView {
public:
    WeightView(const InteractionStore& store, WeightScheme scheme);

    const InteractionStore& store() const { return *store_; }
    const WeightScheme& scheme() const { return scheme_; }
    std::size_t entity_count() const { return store_->entity_count(); }

    double weight_of(EntityId i, EntityId j) const;

    // Positives of row i with their weight c_ij in Partner::value.
    std::span<const Partner> positives(EntityId i) const;

private:
    const InteractionStore* store_;
    WeightScheme scheme_;
    std::vector<std::size_t> offsets_;
    std::vector<Partner> weighted_;
};

}  // namespace lmfrank
