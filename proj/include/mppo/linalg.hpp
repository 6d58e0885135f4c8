// Copyright 2026 The mppo Authors
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

#ifndef MPPO_LINALG_HPP_
#define MPPO_LINALG_HPP_

#include <Eigen/Dense>

#include <complex>

namespace mppo {

using Complex = std::complex<double>;
using ComplexOperator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

enum class Pauli { kIdentity = 0, kX = 1, kY = 2, kZ = 3 };

// Largest elementwise |A - A^dagger|.
double hermiticity_error(const ComplexOperator& a);
// Largest elementwise |U^dagger U - I|.
double unitarity_error(const ComplexOperator& u);

bool is_hermitian(const ComplexOperator& a, double tol);
bool is_unitary(const ComplexOperator& u, double tol);

// Index convention: kron(A,B)(i*dB+k, j*dB+l) = A(i,j) * B(k,l).
ComplexOperator kron(const ComplexOperator& a, const ComplexOperator& b);

ComplexOperator pauli(Pauli which);

// Embeds a single-site operator at `site` of an n-site chain of qubits, with
// site 0 the most significant tensor factor.
ComplexOperator embed_site(const ComplexOperator& op, int site, int n_sites);

struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;    // ascending
  ComplexOperator eigenvectors;   // orthonormal columns
};

// Throws NotHermitian when the input deviates from Hermitian by more than
// 1e-10 elementwise.
EigenDecomposition eig_hermitian(const ComplexOperator& h);

// exp(-i * scale * H) built from the spectral decomposition of H.
ComplexOperator propagator(const ComplexOperator& h, double scale);

// (Tr_S U)(k,l) = sum_i U(i*dB+k, i*dB+l), tracing out the leading factor.
ComplexOperator partial_trace_system(const ComplexOperator& u, int d_system,
                                     int d_bath);

// Sum of singular values.
double trace_norm(const ComplexOperator& m);

// <a, b>, conjugate-linear in `a`.
Complex overlap(const StateVector& a, const StateVector& b);

// Re Tr(rho_target^dagger rho).
double overlap_density(const ComplexOperator& rho_target,
                       const ComplexOperator& rho);

}  // namespace mppo

#endif  // MPPO_LINALG_HPP_
