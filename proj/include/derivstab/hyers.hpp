#pragma once

// The direct method: mu(a) = lim f(2^n a) / 2^n, delta from g or from mu, and
// the complex-scalar decomposition behind C-linearity.

#include <array>
#include <iosfwd>
#include <vector>

#include "derivstab/control.hpp"
#include "derivstab/maps.hpp"

namespace derivstab {

/// s_n = f(2^n a) / 2^n for n = 0..N (or 2^{-n} g(2^n c) for the delta route).
struct ExtrapolationTrace {
  Element argument;
  std::vector<ModuleElement> terms;  // s_0 .. s_N
  std::vector<double> increments;    // ||s_{n+1} - s_n||, n = 0..N-1
  ModuleElement limit;               // s_N
  double certified_gap = 0.0;        // bound on ||s_N - lim s_n||

  int depth() const noexcept { return static_cast<int>(terms.size()) - 1; }
};

/// Extrapolates mu(a) to depth N in [1, 512]. The gap is the tail
/// 1/2 sum_{k >= N} 2^{-k} phi(2^k a, 2^k a, 0, 0) of the control series.
ExtrapolationTrace extrapolate_mu(const ApproximateMapPair& pair, const ControlFunction& cf,
                                  const Element& a, int depth);

/// delta(c) = lim 2^{-n} g(2^n c), certified with the same control tail.
ExtrapolationTrace extract_delta_limit(const ApproximateMapPair& pair, const ControlFunction& cf,
                                       const Element& c, int depth);

inline constexpr double kContaminationTolerance = 1e-8;

struct AssembledMap {
  LinearMap map;
  /// Per-column bound on ||mu_assembled(e_j) - mu(e_j)||.
  std::vector<double> column_gaps;
  /// max_j ||mu(i e_j) - i mu(e_j)||: the defect of the real-linear
  /// extrapolated map commuting with multiplication by i.
  double j_commutation_residual = 0.0;
  int depth = 0;

  /// Bound on ||mu_assembled(a) - mu(a)|| for an arbitrary a.
  double gap_at(const Element& a) const;
};

/// Extrapolates on every e_j and i e_j and keeps the complex-linear part.
/// Throws ContaminationError if the J-commutation residual exceeds 1e-8.
AssembledMap assemble_mu(const ApproximateMapPair& pair, const ControlFunction& cf, int depth);

/// delta(a) = mu(a) - a mu(1).
LinearMap extract_delta_algebraic(const LinearMap& mu);

/// Depth for which the control tail falls below 1e-12 relative: 48 for
/// constant controls, ceil(log2(1e12) / (1 - q)) for power-type controls.
int default_depth(const ControlFunction& cf);

struct ScalarDecomposition {
  Scalar gamma;
  std::array<double, 2> integer_parts{};  // floor(Re gamma), floor(Im gamma)
  std::array<double, 2> fractional{};     // in [0, 1)
  /// lambda_{1,1}, lambda_{1,2}, lambda_{2,1}, lambda_{2,2}, all unimodular,
  /// with fractional[i] = (lambda_{i,1} + lambda_{i,2}) / 2.
  std::array<Scalar, 4> unimodular{};
};

ScalarDecomposition scalar_decompose(Scalar gamma);
/// ([t1] + (l11 + l12)/2) + i ([t2] + (l21 + l22)/2).
Scalar recombine(const ScalarDecomposition& d);

/// One JSON object per line: {"n", "coords", "increment_norm"}.
void write_trace_jsonl(std::ostream& out, const ExtrapolationTrace& trace);

}  // namespace derivstab
