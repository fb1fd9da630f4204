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

#include "rydotoc/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rydotoc/random.hpp"

namespace rydotoc {

std::size_t hilbert_dimension(int n_atoms) {
    if (n_atoms < 1 || n_atoms > kMaxAtoms) {
        std::ostringstream msg;
        msg << "atom count " << n_atoms << " outside supported range [1, " << kMaxAtoms << "]";
        throw DimensionError(msg.str());
    }
    return std::size_t{1} << n_atoms;
}

StateVector::StateVector(int n_atoms, CVector amplitudes)
    : n_atoms_(n_atoms), amplitudes_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amplitudes_.size()) != hilbert_dimension(n_atoms)) {
        throw DimensionError("amplitude vector length must be 2^n_atoms");
    }
}

StateVector StateVector::ground(int n_atoms) {
    CVector amps = CVector::Zero(static_cast<Eigen::Index>(hilbert_dimension(n_atoms)));
    amps(0) = 1.0;
    return StateVector(n_atoms, std::move(amps));
}

StateVector StateVector::basis(const Bitstring& bits) {
    const int n = static_cast<int>(bits.size());
    CVector amps = CVector::Zero(static_cast<Eigen::Index>(hilbert_dimension(n)));
    amps(static_cast<Eigen::Index>(bitstring_to_index(bits))) = 1.0;
    return StateVector(n, std::move(amps));
}

void StateVector::normalize() {
    const double nrm = amplitudes_.norm();
    if (nrm == 0.0) throw std::domain_error("cannot normalize the zero vector");
    amplitudes_ /= nrm;
}

Operator::Operator(CMatrix entries, bool hermitian)
    : entries_(std::move(entries)), hermitian_(hermitian) {
    if (entries_.rows() != entries_.cols()) throw DimensionError("operator must be square");
    if (hermitian_ && hermiticity_defect() >= 1e-12) {
        throw std::invalid_argument("operator flagged Hermitian but A != A^dagger");
    }
}

Operator Operator::hermitian(CMatrix entries) { return Operator(std::move(entries), true); }

Operator Operator::identity(std::size_t dimension) {
    const auto d = static_cast<Eigen::Index>(dimension);
    return Operator(CMatrix::Identity(d, d), true);
}

double Operator::hermiticity_defect() const {
    if (entries_.size() == 0) return 0.0;
    return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
}

namespace ops {
Operator pauli_x() {
    CMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return Operator::hermitian(m);
}
Operator pauli_y() {
    CMatrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return Operator::hermitian(m);
}
Operator pauli_z() {
    CMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return Operator::hermitian(m);
}
Operator number() {
    CMatrix m(2, 2);
    m << 0, 0, 0, 1;
    return Operator::hermitian(m);
}
Operator raising() {
    CMatrix m(2, 2);
    m << 0, 0, 1, 0;
    return Operator(m);
}
}  // namespace ops

ProbabilityDistribution::ProbabilityDistribution(RVector probs) : probs_(std::move(probs)) {
    if (probs_.size() == 0) throw std::invalid_argument("empty probability distribution");
    for (Eigen::Index i = 0; i < probs_.size(); ++i) {
        if (!(probs_(i) >= -1e-14 && probs_(i) <= 1.0 + 1e-14)) {
            throw std::invalid_argument("probability outside [0,1]");
        }
    }
    if (std::abs(probs_.sum() - 1.0) > 1e-10) {
        throw std::invalid_argument("probabilities do not sum to 1");
    }
}

ProbabilityDistribution ProbabilityDistribution::from_state(const StateVector& state) {
    return ProbabilityDistribution(state.probabilities());
}

Operator embed_local(const Operator& op, int site, int n_atoms) {
    if (op.dimension() != 2) throw DimensionError("embed_local expects a 2x2 operator");
    const std::size_t dim = hilbert_dimension(n_atoms);
    if (site < 0 || site >= n_atoms) {
        throw std::out_of_range("site " + std::to_string(site) + " out of range for " +
                                std::to_string(n_atoms) + " atoms");
    }
    const std::size_t mask = site_mask(site, n_atoms);
    const CMatrix& a = op.matrix();
    CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t col = 0; col < dim; ++col) {
        const int b_col = (col & mask) ? 1 : 0;
        const std::size_t rest = col & ~mask;
        for (int b_row = 0; b_row < 2; ++b_row) {
            const std::size_t row = rest | (b_row ? mask : 0);
            out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = a(b_row, b_col);
        }
    }
    return Operator(std::move(out), op.is_hermitian());
}

double expectation(const StateVector& state, const Operator& obs) {
    if (obs.dimension() != state.dimension()) {
        throw DimensionError("observable and state dimensions differ");
    }
    if (!obs.is_hermitian()) throw std::invalid_argument("expectation requires a Hermitian observable");
    const CVector& psi = state.amplitudes();
    const Complex value = psi.dot(obs.matrix() * psi);
    if (std::abs(value.imag()) >= 1e-10) {
        throw std::runtime_error("expectation value has an imaginary residue");
    }
    return value.real();
}

std::vector<double> occupations(std::span<const double> probabilities, int n_atoms) {
    std::vector<double> occ(static_cast<std::size_t>(n_atoms), 0.0);
    for (std::size_t idx = 0; idx < probabilities.size(); ++idx) {
        const double p = probabilities[idx];
        if (p == 0.0) continue;
        for (int j = 0; j < n_atoms; ++j) {
            if (idx & site_mask(j, n_atoms)) occ[static_cast<std::size_t>(j)] += p;
        }
    }
    return occ;
}

std::vector<double> occupations(const StateVector& state) {
    const RVector p = state.probabilities();
    return occupations(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                       state.n_atoms());
}

std::vector<Bitstring> sample_shots(std::span<const double> probabilities, int n_atoms,
                                    std::size_t n_shots, std::uint64_t rng_seed) {
    if (n_shots < 1) throw std::invalid_argument("n_shots must be at least 1");
    if (probabilities.size() != hilbert_dimension(n_atoms)) {
        throw DimensionError("probability vector length must be 2^n_atoms");
    }
    std::vector<double> cumulative(probabilities.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        if (probabilities[i] < 0.0) throw std::invalid_argument("negative probability");
        acc += probabilities[i];
        cumulative[i] = acc;
    }
    if (std::abs(acc - 1.0) > 1e-8) throw std::invalid_argument("cannot sample an unnormalized distribution");
    Rng rng(rng_seed);
    std::uniform_real_distribution<double> uniform(0.0, acc);
    std::vector<Bitstring> shots;
    shots.reserve(n_shots);
    for (std::size_t s = 0; s < n_shots; ++s) {
        const double u = uniform(rng);
        // first bin whose cumulative weight exceeds u; such a bin has p > 0
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) --it;
        shots.push_back(index_to_bitstring(static_cast<std::size_t>(it - cumulative.begin()), n_atoms));
    }
    return shots;
}

std::vector<Bitstring> sample_shots(const StateVector& state, std::size_t n_shots,
                                    std::uint64_t rng_seed) {
    if (std::abs(state.squared_norm() - 1.0) > 1e-8) {
        throw std::invalid_argument("cannot sample an unnormalized state");
    }
    const RVector p = state.probabilities();
    return sample_shots(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                        state.n_atoms(), n_shots, rng_seed);
}

std::vector<double> occupancy_estimates(std::span<const Bitstring> shots) {
    if (shots.empty()) throw std::invalid_argument("no shots to estimate occupancies from");
    const std::size_t n = shots.front().size();
    std::vector<std::size_t> counts(n, 0);
    for (const auto& s : shots) {
        if (s.size() != n) throw std::invalid_argument("ragged bitstring lengths");
        for (std::size_t j = 0; j < n; ++j) {
            if (s[j] == '1') {
                ++counts[j];
            } else if (s[j] != '0') {
                throw std::invalid_argument("bitstring contains characters other than 0/1");
            }
        }
    }
    std::vector<double> est(n);
    for (std::size_t j = 0; j < n; ++j) {
        est[j] = static_cast<double>(counts[j]) / static_cast<double>(shots.size());
    }
    return est;
}

Bitstring index_to_bitstring(std::size_t index, int n_atoms) {
    Bitstring bits(static_cast<std::size_t>(n_atoms), '0');
    for (int j = 0; j < n_atoms; ++j) {
        if (index & site_mask(j, n_atoms)) bits[static_cast<std::size_t>(j)] = '1';
    }
    return bits;
}

std::size_t bitstring_to_index(const Bitstring& bits) {
    std::size_t index = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') throw std::invalid_argument("bitstring must contain only 0/1");
        index = (index << 1) | static_cast<std::size_t>(c == '1');
    }
    return index;
}

}  // namespace rydotoc
