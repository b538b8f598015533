#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pgru {

struct GradcheckOptions {
  std::uint64_t seed = 1;
  std::size_t dims = 4;       // upper bound on input and hidden sizes
  std::size_t len = 4;        // upper bound on sequence length
  std::size_t instances = 20;
  double epsilon = 1e-5;
};

struct GradcheckComponent {
  std::string name;
  double worst_relative_error = 0.0;
  double threshold = 0.0;
  std::string worst_coordinate;
  std::size_t coordinates_checked = 0;
  bool passed() const { return worst_relative_error < threshold; }
};

struct GradcheckReport {
  std::vector<GradcheckComponent> components;
  bool passed() const;
};

/// |a - n| / max(|a|, |n|, 1e-7): relative where the gradient is non-trivial,
/// absolute (scaled by 1e7) where both sides are essentially zero.
double gradient_relative_error(double analytic, double numeric);

/// BPTT of the GRU against central differences of a random linear readout of
/// h_T, over random sizes, lengths and both bias modes.
GradcheckComponent check_encoder_gradients(const GradcheckOptions& options);

/// Hinge loss gradients on random vectors, skipping instances near a kink.
GradcheckComponent check_loss_gradients(const GradcheckOptions& options);

/// Mean batch loss through encoder and loss w.r.t. every parameter and every
/// trainable word vector.
GradcheckComponent check_end_to_end_gradients(const GradcheckOptions& options);

/// One train_step: parameter delta against -lr * clipped analytic gradient,
/// with clipping forced to engage.
GradcheckComponent check_step_delta(const GradcheckOptions& options);

GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace pgru
