#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sls/matrix.hpp"

namespace sls {

/// Per-layer class-token features for a batch of labelled samples.
///
/// `layers[l]` holds layer l+1's features as an n_samples x dim row-major
/// block of f32. Layer order follows the backbone's forward order.
struct FeatureTrace {
  std::uint32_t n_layers = 0;
  std::uint32_t n_samples = 0;
  std::uint32_t dim = 0;
  std::uint32_t n_classes = 0;
  std::vector<std::vector<float>> layers;
  std::vector<std::uint32_t> labels;
  std::string dataset_name;

  /// Layer `layer` (0-based) widened to double.
  Matrix layer_matrix(std::size_t layer) const;

  friend bool operator==(const FeatureTrace&, const FeatureTrace&) = default;
};

inline constexpr char kSlsfMagic[4] = {'S', 'L', 'S', 'F'};
inline constexpr std::uint32_t kSlsfVersion = 1;
inline constexpr std::size_t kSlsfHeaderBytes = 28;

/// Throws ValidationError naming the first invariant that fails.
void validate_trace(const FeatureTrace& trace);

/// Serialised size in bytes of a valid trace.
std::size_t slsf_size(const FeatureTrace& trace);

void write_trace(const FeatureTrace& trace, std::ostream& out);
void write_trace_file(const FeatureTrace& trace, const std::filesystem::path& path);

/// Reads and validates one SLSF v1 trace. The stream must end right after
/// the label block.
FeatureTrace load_trace(std::istream& in);
FeatureTrace load_trace_file(const std::filesystem::path& path);

/// Stratified, seeded subsample down to at most `max_samples` rows.
///
/// Every class keeps one row; the remaining budget is split in proportion
/// to each class's remaining rows (largest-remainder rounding, ties to the
/// lower class id). Retained rows keep their original relative order.
/// Returns the input unchanged when n_samples <= max_samples.
FeatureTrace subsample_trace(const FeatureTrace& trace, std::size_t max_samples, std::uint64_t seed);

}  // namespace sls
