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

#include "mppo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mppo/error.hpp"

namespace mppo {
namespace {

constexpr double kHermitianTolerance = 1e-10;

void require_square(const ComplexOperator& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": operator must be square and non-empty");
  }
}

}  // namespace

double hermiticity_error(const ComplexOperator& a) {
  require_square(a, "hermiticity_error");
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double unitarity_error(const ComplexOperator& u) {
  require_square(u, "unitarity_error");
  const ComplexOperator gram = u.adjoint() * u;
  return (gram - ComplexOperator::Identity(u.rows(), u.cols()))
      .cwiseAbs()
      .maxCoeff();
}

bool is_hermitian(const ComplexOperator& a, double tol) {
  return hermiticity_error(a) <= tol;
}

bool is_unitary(const ComplexOperator& u, double tol) {
  return unitarity_error(u) <= tol;
}

ComplexOperator kron(const ComplexOperator& a, const ComplexOperator& b) {
  const Eigen::Index ra = a.rows(), ca = a.cols();
  const Eigen::Index rb = b.rows(), cb = b.cols();
  ComplexOperator out(ra * rb, ca * cb);
  for (Eigen::Index i = 0; i < ra; ++i) {
    for (Eigen::Index j = 0; j < ca; ++j) {
      out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
    }
  }
  return out;
}

ComplexOperator pauli(Pauli which) {
  const Complex i(0.0, 1.0);
  ComplexOperator p(2, 2);
  switch (which) {
    case Pauli::kIdentity:
      p << 1.0, 0.0, 0.0, 1.0;
      break;
    case Pauli::kX:
      p << 0.0, 1.0, 1.0, 0.0;
      break;
    case Pauli::kY:
      p << 0.0, -i, i, 0.0;
      break;
    case Pauli::kZ:
      p << 1.0, 0.0, 0.0, -1.0;
      break;
  }
  return p;
}

ComplexOperator embed_site(const ComplexOperator& op, int site, int n_sites) {
  const Eigen::Index left = Eigen::Index{1} << site;
  const Eigen::Index right = Eigen::Index{1} << (n_sites - site - 1);
  return kron(kron(ComplexOperator::Identity(left, left), op),
              ComplexOperator::Identity(right, right));
}

EigenDecomposition eig_hermitian(const ComplexOperator& h) {
  require_square(h, "eig_hermitian");
  if (hermiticity_error(h) > kHermitianTolerance) {
    throw Error(ErrorCode::kNotHermitian,
                "eig_hermitian: input is not Hermitian within 1e-10");
  }
  // Symmetrize so the solver sees an exactly Hermitian input.
  const ComplexOperator sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexOperator> solver(sym);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

ComplexOperator propagator(const ComplexOperator& h, double scale) {
  const EigenDecomposition eig = eig_hermitian(h);
  const Complex minus_i(0.0, -1.0);
  const Eigen::VectorXcd phases =
      (minus_i * scale * eig.eigenvalues.cast<Complex>()).array().exp();
  return eig.eigenvectors * phases.asDiagonal() * eig.eigenvectors.adjoint();
}

ComplexOperator partial_trace_system(const ComplexOperator& u, int d_system,
                                     int d_bath) {
  if (d_system < 1 || d_bath < 1 || u.rows() != u.cols() ||
      u.rows() != Eigen::Index{d_system} * d_bath) {
    throw Error(ErrorCode::kDimensionMismatch,
                "partial_trace_system: operator dimension " +
                    std::to_string(u.rows()) + " != " +
                    std::to_string(d_system) + " * " + std::to_string(d_bath));
  }
  ComplexOperator out = ComplexOperator::Zero(d_bath, d_bath);
  for (int i = 0; i < d_system; ++i) {
    out += u.block(Eigen::Index{i} * d_bath, Eigen::Index{i} * d_bath, d_bath,
                   d_bath);
  }
  return out;
}

double trace_norm(const ComplexOperator& m) {
  const ComplexOperator gram = m.adjoint() * m;
  const EigenDecomposition eig = eig_hermitian(0.5 * (gram + gram.adjoint()));
  double total = 0.0;
  for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k) {
    total += std::sqrt(std::max(0.0, eig.eigenvalues(k)));
  }
  return total;
}

Complex overlap(const StateVector& a, const StateVector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "overlap: dimension mismatch");
  }
  return a.dot(b);  // Eigen conjugates the left operand.
}

double overlap_density(const ComplexOperator& rho_target,
                       const ComplexOperator& rho) {
  if (rho_target.rows() != rho.rows() || rho_target.cols() != rho.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "overlap_density: dimension mismatch");
  }
  return (rho_target.adjoint() * rho).trace().real();
}

}  // namespace mppo
