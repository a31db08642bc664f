#pragma once

// Sections σ(x) = (x, σ^α(x)) of an adapted submersion: second fundamental
// forms, tension fields, correction tensors and the harmonicity verdicts.

#include <memory>
#include <string>
#include <vector>

#include "harmsec/submersion.hpp"

namespace harmsec {

class Section {
 public:
  Section() = default;
  /// `fiber` holds one expression per fibre coordinate, over the base coordinates.
  Section(std::shared_ptr<const SubmersionSpace> space, std::vector<Expr> fiber, std::string name = "");

  const SubmersionSpace& space() const { return *space_; }
  const std::shared_ptr<const SubmersionSpace>& space_ptr() const { return space_; }
  const std::vector<Expr>& components() const { return exprs_; }
  const std::string& name() const { return name_; }

  struct Jet {
    Vec x;
    Vec p;                  // σ(x) on E
    Mat d1;                 // d1(α, i) = ∂_i σ^α
    std::vector<Mat> d2;    // d2[α](i, j) = ∂_i ∂_j σ^α
  };
  Jet jet(const Vec& x) const;
  Vec point(const Vec& x) const;

 private:
  std::shared_ptr<const SubmersionSpace> space_;
  std::vector<Expr> exprs_;
  std::vector<Program> progs_;
  std::string name_;
};

/// Conventions for C_σ. Pullback: T_{vσ*X}H(Y) + A_{H(X)}H(Y). The bracket
/// forms are 2T_{vσ*X}H(Y) + A_{H(X)}H(Y) ± v[H(X), W_Y].
enum class CConvention { Pullback, BracketPlus, BracketMinus };
const char* convention_name(CConvention c);

/// σ_*X at σ(x); X is a base tangent at x.
Vec pushforward(const Section& s, const Tangent& x);
/// β_σ(∂_i, ∂_j) = ∇^E_{σ*∂_i}σ*∂_j − σ*∇^M_{∂_i}∂_j
Vec beta(const Section& s, int i, int j, const Vec& x);

struct SplitTangent {
  Vec vertical;
  Vec horizontal;
  Vec total() const { return vertical + horizontal; }
};

/// τ_σ = Σ_a ∇^E_{σ*e_a}σ*e_a − σ*∇^M_{e_a}e_a over the Gram–Schmidt frame.
SplitTangent tension(const Section& s, const Vec& x);
/// g^{ij} β_σ(∂_i, ∂_j), an independent evaluation path for τ_σ.
Vec tension_from_beta(const Section& s, const Vec& x);
/// τ^v_σ = Σ_a v∇^E_{σ*e_a}(vσ*e_a) − vσ*∇^M_{e_a}e_a, the vertical part
/// of σ*e_a differentiated along σ.
Vec tension_v(const Section& s, const Vec& x);
/// The same sum with v∇^E_{vσ*e_a} vσ*e_a, both slots vertical.
Vec tension_v_literal(const Section& s, const Vec& x);

Vec tensor_C(const Section& s, int i, int j, const Vec& x, CConvention c = CConvention::Pullback);
/// D_σ(X,Y) = T_{vσ*X}vσ*Y + 2A_{H(X)}vσ*Y
Vec tensor_D(const Section& s, int i, int j, const Vec& x);

/// Everything evaluated at one base point with one frame.
struct PointDiagnostics {
  Vec x;
  Vec p;
  SplitTangent tau;
  Vec tau_v;
  Vec tau_v_literal;
  Vec tr_C[3];          // indexed by CConvention
  Vec tr_D;
  Vec bracket_trace;    // Σ_a v[H(e_a), W_{e_a}]
  double residual_v[3];  // |vτ − τ^v − tr C|
  double residual_literal[2];  // |vτ − τ^v_literal − tr C(±)|
  double residual_h;     // |hτ − tr D|
};
PointDiagnostics diagnose(const Section& s, const Vec& x);

/// β_σ, its vertical counterparts and C_σ (pullback) on all coordinate
/// pairs at x, plus the frame traces; entry (i, j) at index i·n + j.
struct FormTable {
  int n = 0;
  std::vector<Vec> beta, beta_v, beta_v_literal;
  Vec tau, tau_v, tau_v_literal, tr_C;
};
FormTable second_fundamental_forms(const Section& s, const Vec& x);

enum class ItemStatus { Vacuous, Holds, Violated };
const char* item_status_name(ItemStatus s);

struct SectionOptions {
  int samples = 64;
  double tolerance = 1e-8;
  std::vector<Vec> pinned;
  int workers = 0;
};

struct SectionReport {
  std::vector<PointDiagnostics> points;
  double tolerance = 1e-8;

  double max_tau = 0, max_tau_v = 0, max_tau_v_literal = 0, max_tau_h = 0;
  double max_tr_C[3] = {0, 0, 0};
  double max_tr_D = 0;
  double max_bracket_trace = 0;
  double max_residual_v[3] = {0, 0, 0};
  double max_residual_literal[2] = {0, 0};
  double max_residual_h = 0;
  double max_tau_v_off_vertical = 0;

  /// First convention whose vertical residual passes at every sample.
  std::optional<CConvention> convention;
  /// Sign (+1 / −1) reconciling the literal vertical tension, 0 if neither.
  int literal_sign = 0;
  bool horizontal_ok = false;

  bool harmonic_map = false;
  bool harmonic_section = false;
  ItemStatus items[5] = {};
  /// A harmonic map must be a harmonic section (at 10× the tolerance).
  bool corollary_consistent = true;

  bool decomposition_ok() const { return convention.has_value() && horizontal_ok; }
  bool any_violation() const;
};

/// Evaluates the decomposition identities at the sample points.
SectionReport decomposition_check(const Section& s, const SectionOptions& opt = {});
/// decomposition_check plus verdicts and the five-item truth table.
SectionReport classify(const Section& s, const SectionOptions& opt = {});

}  // namespace harmsec
