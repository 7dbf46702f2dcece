#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "densemu/density.hpp"

namespace densemu {

// Axis-aligned input domain.
struct Box {
    std::vector<double> lo, hi;

    std::size_t dim() const { return lo.size(); }

    bool contains(std::span<const double> x) const {
        if (x.size() != lo.size()) return false;
        for (std::size_t j = 0; j < lo.size(); ++j)
            if (x[j] < lo[j] || x[j] > hi[j]) return false;
        return true;
    }
};

// N observed (input point, output density) pairs on one shared grid.
// Immutable after construction.
class TrainingSet {
public:
    TrainingSet(std::vector<std::vector<double>> inputs, std::vector<Density> densities,
                std::optional<Box> bounds = std::nullopt)
        : inputs_(std::move(inputs)), densities_(std::move(densities)), bounds_(std::move(bounds)) {
        if (inputs_.empty() || inputs_.size() != densities_.size())
            throw std::invalid_argument("TrainingSet: inputs and densities must pair up");
        const std::size_t d = inputs_.front().size();
        if (d == 0) throw std::invalid_argument("TrainingSet: zero-dimensional inputs");
        for (const auto& x : inputs_)
            if (x.size() != d) throw std::invalid_argument("TrainingSet: ragged input dimensions");
        for (const auto& f : densities_) require_same_grid(f.grid(), densities_.front().grid());
        if (bounds_ && bounds_->dim() != d)
            throw std::invalid_argument("TrainingSet: bounds dimension mismatch");
    }

    std::size_t size() const { return inputs_.size(); }
    std::size_t input_dim() const { return inputs_.front().size(); }
    const Grid& grid() const { return densities_.front().grid(); }
    const std::vector<double>& input(std::size_t i) const { return inputs_[i]; }
    const std::vector<std::vector<double>>& inputs() const { return inputs_; }
    const Density& density(std::size_t i) const { return densities_[i]; }
    const std::vector<Density>& densities() const { return densities_; }
    const std::optional<Box>& bounds() const { return bounds_; }

private:
    std::vector<std::vector<double>> inputs_;
    std::vector<Density> densities_;
    std::optional<Box> bounds_;
};

}  // namespace densemu
