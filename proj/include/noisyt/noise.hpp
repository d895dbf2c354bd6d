// Benchmark noise models and label corruption.
#pragma once

#include <cstdint>
#include <string_view>

#include "noisyt/core.hpp"

namespace noisyt::noise {

enum class NoiseKind { symmetric, pair };

/// "sym" or "pair"; throws InvalidArgument otherwise.
NoiseKind parse_noise_kind(std::string_view name);
std::string_view to_string(NoiseKind kind) noexcept;

/// Diagonal 1-eps, every off-diagonal entry eps/(C-1).
TransitionMatrix symmetric_matrix(std::size_t num_classes, double eps);

/// Diagonal 1-eps, entry (i, (i+1) mod C) = eps, zeros elsewhere.
TransitionMatrix pair_matrix(std::size_t num_classes, double eps);

TransitionMatrix make_matrix(NoiseKind kind, std::size_t num_classes, double eps);

/// Returns a copy whose noisy label for row i is drawn from row
/// clean_labels[i] of T using counter i of the seeded stream. Features and
/// clean labels are copied unchanged.
Dataset corrupt(const Dataset& data, const TransitionMatrix& t, std::uint64_t seed);

}  // namespace noisyt::noise
