#pragma once

// Submersions π: E → M in adapted coordinates (x^1..x^n, y^1..y^r) with a
// horizontal distribution spanned by H(∂_i) = ∂_i + h^α_i ∂_{y^α}.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "harmsec/geometry.hpp"

namespace harmsec {

struct ProjectorPair {
  Mat v;
  Mat h;
};

/// Lift, its derivatives, projectors and connection symbols at one point,
/// for evaluating many tensors there.
struct LocalSplitting {
  Vec p;
  Mat h;
  std::vector<Mat> dh;
  ProjectorPair P;
  Christoffel G;
};

/// h^α_i = −(G_ff⁻¹)^{αβ} g_{βi} at p, for a total metric whose first n
/// coordinates are the base's. Throws SingularFiberBlock.
Mat horizontal_from_metric(const Metric& total, int n, const Vec& p);

class SubmersionSpace {
 public:
  SubmersionSpace() = default;
  /// `lift[α][i]` = h^α_i as expressions over the total coordinates.
  SubmersionSpace(Metric base, Chart total, std::vector<std::vector<Expr>> lift, Connection connection);
  /// Horizontal distribution = g_E-orthogonal complement of the fibres.
  SubmersionSpace(Metric base, Metric total_metric, Connection connection);
  /// TM over `base` with fibre coordinates from `fiber`, the horizontal lift
  /// connection and h^k_i = −y^j Γ^k_ij.
  static SubmersionSpace tangent_bundle(Metric base, const Chart& fiber);

  int n() const { return base_.dim(); }
  int r() const { return total_.dim() - base_.dim(); }
  int dim() const { return total_.dim(); }
  const Metric& base_metric() const { return base_; }
  const Chart& base_chart() const { return base_.chart(); }
  const Chart& total_chart() const { return total_; }
  const Connection& connection() const { return conn_; }
  enum class LiftKind { Explicit, FromMetric, TangentBundle };
  LiftKind lift_kind() const { return lift_kind_; }
  bool lift_from_metric() const { return lift_kind_ == LiftKind::FromMetric; }
  const std::optional<Metric>& total_metric() const { return total_metric_; }
  const std::vector<std::vector<Expr>>& lift_expressions() const { return lift_exprs_; }

  SubmersionSpace with_connection(Connection c) const;

  /// h^α_i at p (r × n).
  Mat lift(const Vec& p) const;
  /// Also dh[a] = ∂_a h at p, a over the total coordinates.
  Mat lift(const Vec& p, std::vector<Mat>& dh) const;

  ProjectorPair projectors(const Vec& p) const;
  /// Projects a field jet: the vertical / horizontal part as a field.
  LocalField vertical_part(const Vec& p, const LocalField& u) const;
  LocalField horizontal_part(const Vec& p, const LocalField& u) const;

  /// H_p(X) for a base tangent X at π(p). Throws BasePointMismatch.
  Vec horizontal_lift(const Tangent& x, const Vec& p) const;
  /// The global field H(X) = X^i(∂_i + h^α_i ∂_α) with constant X^i.
  LocalField horizontal_field(const Vec& p, const Vec& x) const;

  Christoffel gamma(const Vec& p) const { return conn_.at(p); }

  LocalSplitting splitting(const Vec& p) const;
  LocalField vertical_part(const LocalSplitting& s, const LocalField& u) const;
  LocalField horizontal_part(const LocalSplitting& s, const LocalField& u) const;
  LocalField horizontal_field(const LocalSplitting& s, const Vec& x) const;
  Vec oneill_T(const LocalSplitting& s, const LocalField& u, const LocalField& v) const;
  Vec oneill_A(const LocalSplitting& s, const LocalField& u, const LocalField& v) const;

  /// T_U V = h∇_{vU}vV + v∇_{vU}hV
  Vec oneill_T(const Vec& p, const LocalField& u, const LocalField& v) const;
  /// A_U V = v∇_{hU}hV + h∇_{hU}vV
  Vec oneill_A(const Vec& p, const LocalField& u, const LocalField& v) const;
  /// Same, reusing connection symbols already evaluated at p.
  Vec oneill_T(const Vec& p, const Christoffel& g, const LocalField& u, const LocalField& v) const;
  Vec oneill_A(const Vec& p, const Christoffel& g, const LocalField& u, const LocalField& v) const;

 private:
  void validate() const;

  LiftKind lift_kind_ = LiftKind::Explicit;
  Metric base_;
  Chart total_;
  std::vector<std::vector<Expr>> lift_exprs_;
  std::vector<std::vector<Program>> lift_progs_;
  std::optional<Metric> total_metric_;
  Connection conn_;
};

struct Residual {
  std::string name;
  double max = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double tolerance = 1e-8;
  bool pass = true;
  Vec worst_point;
  std::string worst_label;
};

struct VerificationReport {
  std::string check;
  std::vector<Residual> residuals;
  bool pass() const {
    for (const auto& r : residuals)
      if (!r.pass) return false;
    return true;
  }
  const Residual& operator[](std::string_view name) const;
};

struct CheckOptions {
  int samples = 64;
  double tolerance = 1e-8;
  std::vector<Vec> pinned;
  int workers = 0;
};

/// max |h∇_{H∂_i}H(∂_j) − H(∇^M_{∂_i}∂_j)|
VerificationReport check_affine(const SubmersionSpace& s, const CheckOptions& opt = {});
/// max |A_{H∂_i}H∂_j + A_{H∂_j}H∂_i|
VerificationReport check_skew(const SubmersionSpace& s, const CheckOptions& opt = {});
/// T_V W, A_Y W and h∇_V H(X) on coordinate fields, reported separately.
VerificationReport check_blumenthal(const SubmersionSpace& s, const CheckOptions& opt = {});
/// max |v[H∂_i, H∂_j]|; passes when HE is integrable.
VerificationReport check_horizontal_integrability(const SubmersionSpace& s, const CheckOptions& opt = {});
/// v + h = I, v² = v, h² = h, vh = hv = 0, π_*v = 0, rank v = r.
VerificationReport check_projectors(const SubmersionSpace& s, const CheckOptions& opt = {});

}  // namespace harmsec
