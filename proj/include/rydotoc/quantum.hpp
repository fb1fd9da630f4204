// Copyright 2026 The rydotoc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Dense state and operator arithmetic over the 2^N Rydberg occupation basis.
//
// Basis convention: index bit (N-1-j) holds the occupation of atom j, so atom 0
// is the most significant bit and the bitstring "b0 b1 ... b_{N-1}" reads the
// index in binary. |1> is the Rydberg state and is recorded as bit '1'.

namespace rydotoc {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// A measured bitstring of length N, character j is atom j.
using Bitstring = std::string;

inline constexpr int kMaxAtoms = 12;

class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Dimension of the Hilbert space for n atoms; throws past kMaxAtoms.
std::size_t hilbert_dimension(int n_atoms);

/// Bit mask that selects atom `site` inside a basis index.
inline std::size_t site_mask(int site, int n_atoms) {
    return std::size_t{1} << (n_atoms - 1 - site);
}

inline int occupation(std::size_t index, int site, int n_atoms) {
    return (index & site_mask(site, n_atoms)) ? 1 : 0;
}

class StateVector {
  public:
    StateVector() = default;
    StateVector(int n_atoms, CVector amplitudes);

    /// |0...0>
    static StateVector ground(int n_atoms);
    /// Computational basis state addressed by a bitstring such as "0110".
    static StateVector basis(const Bitstring& bits);

    int n_atoms() const { return n_atoms_; }
    std::size_t dimension() const { return static_cast<std::size_t>(amplitudes_.size()); }
    const CVector& amplitudes() const { return amplitudes_; }
    CVector& amplitudes() { return amplitudes_; }

    double squared_norm() const { return amplitudes_.squaredNorm(); }
    void normalize();
    RVector probabilities() const { return amplitudes_.cwiseAbs2(); }

  private:
    int n_atoms_ = 0;
    CVector amplitudes_;
};

class Operator {
  public:
    Operator() = default;
    explicit Operator(CMatrix entries, bool hermitian = false);

    /// Wraps `entries` and verifies Hermiticity to 1e-12.
    static Operator hermitian(CMatrix entries);
    static Operator identity(std::size_t dimension);

    std::size_t dimension() const { return static_cast<std::size_t>(entries_.rows()); }
    const CMatrix& matrix() const { return entries_; }
    bool is_hermitian() const { return hermitian_; }

    /// max |A - A^dagger| entry
    double hermiticity_defect() const;

  private:
    CMatrix entries_;
    bool hermitian_ = false;
};

namespace ops {
Operator pauli_x();
Operator pauli_y();
Operator pauli_z();
/// n = |1><1|
Operator number();
/// |1><0|
Operator raising();
}  // namespace ops

class ProbabilityDistribution {
  public:
    explicit ProbabilityDistribution(RVector probs);
    static ProbabilityDistribution from_state(const StateVector& state);

    const RVector& probs() const { return probs_; }
    std::size_t size() const { return static_cast<std::size_t>(probs_.size()); }

  private:
    RVector probs_;
};

/// I (x) ... (x) op (x) ... (x) I with `op` acting on atom `site`.
Operator embed_local(const Operator& op, int site, int n_atoms);

/// <psi|obs|psi> for a Hermitian observable.
double expectation(const StateVector& state, const Operator& obs);

/// <n_j> for every atom, read from the diagonal of |psi|^2.
std::vector<double> occupations(const StateVector& state);
std::vector<double> occupations(std::span<const double> probabilities, int n_atoms);

/// i.i.d. projective measurements in the occupation basis.
std::vector<Bitstring> sample_shots(const StateVector& state, std::size_t n_shots,
                                    std::uint64_t rng_seed);

/// Shots drawn from an explicit outcome distribution (e.g. a trajectory average).
std::vector<Bitstring> sample_shots(std::span<const double> probabilities, int n_atoms,
                                    std::size_t n_shots, std::uint64_t rng_seed);

/// Per-site mean of the bit values.
std::vector<double> occupancy_estimates(std::span<const Bitstring> shots);

Bitstring index_to_bitstring(std::size_t index, int n_atoms);
std::size_t bitstring_to_index(const Bitstring& bits);

}  // namespace rydotoc
