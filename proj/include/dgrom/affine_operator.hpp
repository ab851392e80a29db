#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dgrom/common.hpp"
#include "dgrom/system.hpp"
#include "dgrom/theta.hpp"

namespace dgrom {

/// Weak-form contribution a block belongs to.
enum class Term : std::uint8_t {
  viscous = 0,
  consistency = 1,
  penalty = 2,
  divergence = 3,
  pressure_jump = 4,
  f1_source = 5,
  f1_neumann = 6,
  f1_penalty = 7,
  f1_symmetry = 8,
  f2 = 9,
};

inline constexpr std::array<Term, 10> all_terms = {
    Term::viscous,   Term::consistency, Term::penalty,    Term::divergence,  Term::pressure_jump,
    Term::f1_source, Term::f1_neumann,  Term::f1_penalty, Term::f1_symmetry, Term::f2};

enum class Target : std::uint8_t { A, B, F1, F2 };

inline Target target_of(Term t) {
  switch (t) {
    case Term::viscous:
    case Term::consistency:
    case Term::penalty: return Target::A;
    case Term::divergence:
    case Term::pressure_jump: return Target::B;
    case Term::f2: return Target::F2;
    default: return Target::F1;
  }
}

inline bool is_matrix_term(Term t) { return target_of(t) == Target::A || target_of(t) == Target::B; }

inline const char* to_string(Term t) {
  switch (t) {
    case Term::viscous: return "viscous";
    case Term::consistency: return "consistency";
    case Term::penalty: return "penalty";
    case Term::divergence: return "divergence";
    case Term::pressure_jump: return "pressure_jump";
    case Term::f1_source: return "f1_source";
    case Term::f1_neumann: return "f1_neumann";
    case Term::f1_penalty: return "f1_penalty";
    case Term::f1_symmetry: return "f1_symmetry";
    case Term::f2: return "f2";
  }
  return "?";
}

/// One parameter-independent block with its coefficient recipe. Matrix terms use `block`,
/// right-hand-side terms use `vector`.
struct AffineTerm {
  Term term = Term::viscous;
  ThetaRecipe theta;
  SpMat block;
  Vector vector;
};

/// sum_i theta_i(mu) * block_i for every operator of the saddle system.
class AffineOperator {
 public:
  AffineOperator() = default;
  AffineOperator(Index n_u, Index n_p, bool alpha_scaling, std::vector<AffineTerm> terms)
      : n_u_(n_u), n_p_(n_p), alpha_scaling_(alpha_scaling), terms_(std::move(terms)) {
    for (const auto& t : terms_) {
      const bool ok = is_matrix_term(t.term)
                          ? Index(t.block.rows()) == n_u_ &&
                                Index(t.block.cols()) == (target_of(t.term) == Target::A ? n_u_ : n_p_)
                          : Index(t.vector.size()) == (target_of(t.term) == Target::F2 ? n_p_ : n_u_);
      if (!ok) throw Error(std::string("affine term size mismatch for ") + to_string(t.term));
    }
    build_pattern(Target::A, pattern_a_);
    build_pattern(Target::B, pattern_b_);
  }

  Index n_u() const { return n_u_; }
  Index n_p() const { return n_p_; }
  bool alpha_scaling() const { return alpha_scaling_; }
  const std::vector<AffineTerm>& terms() const { return terms_; }
  Index size() const { return terms_.size(); }

  /// Number of terms in the expansion of a_IP.
  Index q_a() const {
    return std::count_if(terms_.begin(), terms_.end(), [](const AffineTerm& t) { return target_of(t.term) == Target::A; });
  }

  std::vector<ThetaRecipe> recipes() const {
    std::vector<ThetaRecipe> r;
    for (const auto& t : terms_) r.push_back(t.theta);
    return r;
  }

  ThetaVector evaluate_theta(const MapSet& ms) const { return dgrom::evaluate_theta(recipes(), ms, alpha_scaling_); }

  /// Full-order system at the parameter encoded by `theta`. Pure accumulation, no quadrature.
  StokesSystem assemble(const ThetaVector& theta) const {
    check(theta);
    StokesSystem s;
    s.A = accumulate(pattern_a_, theta);
    s.B = accumulate(pattern_b_, theta);
    s.F1 = Vector::Zero(n_u_);
    s.F2 = Vector::Zero(n_p_);
    for (Index i = 0; i < terms_.size(); ++i) {
      const auto tg = target_of(terms_[i].term);
      if (tg == Target::F1) s.F1 += theta.values[i] * terms_[i].vector;
      if (tg == Target::F2) s.F2 += theta.values[i] * terms_[i].vector;
    }
    return s;
  }

  /// Expansion restricted to one weak-form term.
  SpMat assemble_matrix(Term which, const ThetaVector& theta) const {
    check(theta);
    if (!is_matrix_term(which)) throw Error("not a matrix term");
    SpMat m(Eigen::Index(n_u_), Eigen::Index(target_of(which) == Target::A ? n_u_ : n_p_));
    for (Index i = 0; i < terms_.size(); ++i)
      if (terms_[i].term == which) m += theta.values[i] * terms_[i].block;
    return m;
  }

  Vector assemble_vector(Term which, const ThetaVector& theta) const {
    check(theta);
    if (is_matrix_term(which)) throw Error("not a right-hand-side term");
    Vector v = Vector::Zero(Eigen::Index(target_of(which) == Target::F2 ? n_p_ : n_u_));
    for (Index i = 0; i < terms_.size(); ++i)
      if (terms_[i].term == which) v += theta.values[i] * terms_[i].vector;
    return v;
  }

 private:
  struct Pattern {
    SpMat structure;
    std::vector<Index> terms;                  // indices into terms_
    std::vector<std::vector<Index>> scatter;   // per term: nonzero -> slot in structure
  };

  void check(const ThetaVector& theta) const {
    if (theta.values.size() != terms_.size())
      throw Error("theta vector length " + std::to_string(theta.values.size()) + " does not match " +
                  std::to_string(terms_.size()) + " affine terms");
  }

  void build_pattern(Target target, Pattern& p) {
    const Index cols = target == Target::A ? n_u_ : n_p_;
    p.structure = SpMat(Eigen::Index(n_u_), Eigen::Index(cols));
    for (Index i = 0; i < terms_.size(); ++i) {
      if (target_of(terms_[i].term) != target) continue;
      p.terms.push_back(i);
      SpMat ones = terms_[i].block;
      for (Eigen::Index k = 0; k < ones.nonZeros(); ++k) ones.valuePtr()[k] = 1.0;
      p.structure += ones;
    }
    p.structure.makeCompressed();
    for (Index i : p.terms) {
      const SpMat& b = terms_[i].block;
      std::vector<Index> slots;
      slots.reserve(b.nonZeros());
      for (Eigen::Index col = 0; col < b.outerSize(); ++col) {
        const auto* begin = p.structure.innerIndexPtr() + p.structure.outerIndexPtr()[col];
        const auto* end = p.structure.innerIndexPtr() + p.structure.outerIndexPtr()[col + 1];
        for (SpMat::InnerIterator it(b, col); it; ++it) {
          const auto* pos = std::lower_bound(begin, end, it.row());
          slots.push_back(Index(pos - p.structure.innerIndexPtr()));
        }
      }
      p.scatter.push_back(std::move(slots));
    }
  }

  SpMat accumulate(const Pattern& p, const ThetaVector& theta) const {
    SpMat m = p.structure;
    double* values = m.valuePtr();
    std::fill(values, values + m.nonZeros(), 0.0);
    for (Index k = 0; k < p.terms.size(); ++k) {
      const Index i = p.terms[k];
      const double th = theta.values[i];
      const double* bv = terms_[i].block.valuePtr();
      const auto& slots = p.scatter[k];
      for (Index n = 0; n < slots.size(); ++n) values[slots[n]] += th * bv[n];
    }
    return m;
  }

  Index n_u_ = 0, n_p_ = 0;
  bool alpha_scaling_ = false;
  std::vector<AffineTerm> terms_;
  Pattern pattern_a_, pattern_b_;
};

inline ThetaVector evaluate_theta(const AffineOperator& op, const MapSet& ms) { return op.evaluate_theta(ms); }

inline StokesSystem assemble_online(const AffineOperator& op, const ThetaVector& theta) { return op.assemble(theta); }

}  // namespace dgrom
