#pragma once

#include <complex>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace chainheat {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Physical and forcing parameters of the chain. Sites are 0..n.
//
// The force is F_n(tau) = n^a * F(tau / (n^b theta)) in microscopic time,
// with F(s) = sum_l Fhat(l) exp(2 pi i l s). Only l > 0 is stored; the
// negative modes are the complex conjugates so that F is real.
struct ChainParams {
  int n = 16;
  double omega0 = 1.0;
  double gamma = 1.0;
  double t_minus = 1.0;
  double theta = 1.0;
  std::map<int, cplx> force;
  double a = -0.5;
  double b = 0.0;

  int sites() const { return n + 1; }
  bool forced() const;

  // Throws DomainError when an invariant fails.
  void validate() const;

  double amplitude() const;     // n^a
  double period() const;        // n^b theta, microscopic
  double frequency(int l) const;  // 2 pi l / period()

  // F_n at microscopic time tau.
  double force_at(double tau) const;
};

// Stores Fhat(l) honouring Hermitian symmetry; rejects l = 0 and conflicting
// (l, -l) pairs.
void set_force_coefficient(std::map<int, cplx>& force, int l, cplx value);

ChainParams with_sites(ChainParams p, int n);

// Index helpers for the 2(n+1) phase-space vector (q_0..q_n, p_0..p_n).
inline int qi(int x) { return x; }
inline int pi_(int n, int x) { return n + 1 + x; }

}  // namespace chainheat
