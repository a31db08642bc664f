#include "harmsec/expr.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace harmsec {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Syntax: return "SyntaxError";
    case ErrorCode::UnknownFunction: return "UnknownFunction";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::Domain: return "DomainError";
    case ErrorCode::SingularMetric: return "SingularMetric";
    case ErrorCode::BasePointMismatch: return "BasePointMismatch";
    case ErrorCode::SingularFiberBlock: return "SingularFiberBlock";
    case ErrorCode::NonSymmetricConnection: return "NonSymmetricConnection";
    case ErrorCode::UnknownGalleryName: return "UnknownGalleryName";
    case ErrorCode::InvalidHorizon: return "InvalidHorizon";
    case ErrorCode::NonVerticalForm: return "NonVerticalForm";
    case ErrorCode::StepUnstable: return "StepUnstable";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "IoError";
  }
  return "Error";
}

struct Expr::Node {
  Kind kind = Kind::Number;
  double value = 0.0;
  bool is_pi = false;
  std::string name;
  Func func = Func::Sin;
  std::vector<Expr> kids;
};

Expr::Expr() {
  static const auto zero = std::make_shared<const Node>();
  node_ = zero;
}
Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expr Expr::number(double value) {
  auto n = std::make_shared<Node>();
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::pi() {
  auto n = std::make_shared<Node>();
  n->value = std::numbers::pi;
  n->is_pi = true;
  return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::call(Func f, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Call;
  n->func = f;
  n->kids = std::move(args);
  return Expr(std::move(n));
}

Expr Expr::unary_minus(Expr a) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Neg;
  n->kids = {std::move(a)};
  return Expr(std::move(n));
}

Expr Expr::binary(Kind k, Expr a, Expr b) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->kids = {std::move(a), std::move(b)};
  return Expr(std::move(n));
}

Expr operator+(Expr a, Expr b) { return Expr::binary(Expr::Kind::Add, std::move(a), std::move(b)); }
Expr operator-(Expr a, Expr b) { return Expr::binary(Expr::Kind::Sub, std::move(a), std::move(b)); }
Expr operator*(Expr a, Expr b) { return Expr::binary(Expr::Kind::Mul, std::move(a), std::move(b)); }
Expr operator/(Expr a, Expr b) { return Expr::binary(Expr::Kind::Div, std::move(a), std::move(b)); }
Expr pow(Expr a, Expr b) { return Expr::binary(Expr::Kind::Pow, std::move(a), std::move(b)); }

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::number_value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
Expr::Func Expr::func() const { return node_->func; }
const std::vector<Expr>& Expr::children() const { return node_->kids; }

const char* func_name(Expr::Func f) {
  switch (f) {
    case Expr::Func::Sin: return "sin";
    case Expr::Func::Cos: return "cos";
    case Expr::Func::Tan: return "tan";
    case Expr::Func::Exp: return "exp";
    case Expr::Func::Log: return "log";
    case Expr::Func::Sqrt: return "sqrt";
    case Expr::Func::Atan2: return "atan2";
  }
  return "?";
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expr::Kind::Number: return a.number_value() == b.number_value();
    case Expr::Kind::Variable: return a.name() == b.name();
    case Expr::Kind::Call:
      if (a.func() != b.func()) return false;
      break;
    default: break;
  }
  const auto& ka = a.children();
  const auto& kb = b.children();
  if (ka.size() != kb.size()) return false;
  for (std::size_t i = 0; i < ka.size(); ++i)
    if (!(ka[i] == kb[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::Add:
    case Expr::Kind::Sub: return 1;
    case Expr::Kind::Mul:
    case Expr::Kind::Div: return 2;
    case Expr::Kind::Neg: return 3;
    case Expr::Kind::Pow: return 4;
    case Expr::Kind::Number: return e.number_value() < 0 ? 0 : 5;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void print(const Expr& e, std::string& out);

void print_child(const Expr& e, int min_prec, std::string& out) {
  if (precedence(e) < min_prec) {
    out += '(';
    print(e, out);
    out += ')';
  } else {
    print(e, out);
  }
}

void print(const Expr& e, std::string& out) {
  const auto& k = e.children();
  switch (e.kind()) {
    case Expr::Kind::Number:
      if (e.number_value() == std::numbers::pi) {
        out += "pi";
      } else {
        out += format_number(e.number_value());
      }
      return;
    case Expr::Kind::Variable: out += e.name(); return;
    case Expr::Kind::Neg:
      out += '-';
      print_child(k[0], 4, out);  // a nested minus is parenthesised for readability
      return;
    case Expr::Kind::Pow:
      print_child(k[0], 5, out);
      out += '^';
      print_child(k[1], 3, out);
      return;
    case Expr::Kind::Call:
      out += func_name(e.func());
      out += '(';
      for (std::size_t i = 0; i < k.size(); ++i) {
        if (i) out += ", ";
        print(k[i], out);
      }
      out += ')';
      return;
    default: break;
  }
  const int p = precedence(e);
  const char* op = e.kind() == Expr::Kind::Add   ? " + "
                   : e.kind() == Expr::Kind::Sub ? " - "
                   : e.kind() == Expr::Kind::Mul ? "*"
                                                 : "/";
  print_child(k[0], p, out);
  out += op;
  print_child(k[1], p + 1, out);
}

void collect_vars(const Expr& e, std::set<std::string>& out) {
  if (e.kind() == Expr::Kind::Variable) out.insert(e.name());
  for (const auto& c : e.children()) collect_vars(c, out);
}

}  // namespace

std::string Expr::to_string() const {
  std::string out;
  print(*this, out);
  return out;
}

std::set<std::string> Expr::free_variables() const {
  std::set<std::string> out;
  collect_vars(*this, out);
  return out;
}

Expr substitute(const Expr& e, const std::map<std::string, Expr>& repl) {
  switch (e.kind()) {
    case Expr::Kind::Number: return e;
    case Expr::Kind::Variable: {
      auto it = repl.find(e.name());
      return it == repl.end() ? e : it->second;
    }
    case Expr::Kind::Neg: return Expr::unary_minus(substitute(e.children()[0], repl));
    case Expr::Kind::Call: {
      std::vector<Expr> args;
      for (const auto& c : e.children()) args.push_back(substitute(c, repl));
      return Expr::call(e.func(), std::move(args));
    }
    default: break;
  }
  Expr a = substitute(e.children()[0], repl);
  Expr b = substitute(e.children()[1], repl);
  switch (e.kind()) {
    case Expr::Kind::Add: return a + b;
    case Expr::Kind::Sub: return a - b;
    case Expr::Kind::Mul: return a * b;
    case Expr::Kind::Div: return a / b;
    default: return pow(a, b);
  }
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Expr parse_all() {
    Expr e = expr();
    skip_ws();
    if (pos_ != s_.size()) throw SyntaxError(pos_, "operator or end of input");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' ||
                                s_[pos_] == '\n' || s_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + term();
      } else if (accept('-')) {
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * unary();
      } else if (accept('/')) {
        lhs = lhs / unary();
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return Expr::unary_minus(unary());
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return pow(base, unary());
    return base;
  }

  static bool ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool ident_char(char c) {
    return ident_start(c) || (c >= '0' && c <= '9');
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= s_.size()) throw SyntaxError(pos_, "operand");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!accept(')')) throw SyntaxError(pos_, "')'");
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (ident_start(c)) return identifier();
    throw SyntaxError(pos_, "operand");
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && ((s_[pos_] >= '0' && s_[pos_] <= '9') || s_[pos_] == '.'))
      ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < s_.size() && (s_[q] == '+' || s_[q] == '-')) ++q;
      if (q < s_.size() && s_[q] >= '0' && s_[q] <= '9') {
        pos_ = q;
        while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
      }
    }
    double v = 0.0;
    auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != s_.data() + pos_)
      throw SyntaxError(start, "number");
    return Expr::number(v);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    std::string name(s_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      ++pos_;
      static const std::map<std::string, std::pair<Expr::Func, int>> table = {
          {"sin", {Expr::Func::Sin, 1}},   {"cos", {Expr::Func::Cos, 1}},
          {"tan", {Expr::Func::Tan, 1}},   {"exp", {Expr::Func::Exp, 1}},
          {"log", {Expr::Func::Log, 1}},   {"sqrt", {Expr::Func::Sqrt, 1}},
          {"atan2", {Expr::Func::Atan2, 2}}};
      auto it = table.find(name);
      if (it == table.end())
        throw Error(ErrorCode::UnknownFunction,
                    "unknown function '" + name + "' at byte " + std::to_string(start));
      std::vector<Expr> args{expr()};
      while (accept(',')) args.push_back(expr());
      if (!accept(')')) throw SyntaxError(pos_, "')'");
      if (static_cast<int>(args.size()) != it->second.second)
        throw SyntaxError(start, std::to_string(it->second.second) +
                                     " argument(s) for " + name);
      return Expr::call(it->second.first, std::move(args));
    }
    if (name == "pi") return Expr::pi();
    return Expr::variable(std::move(name));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Compilation and evaluation

namespace {

using Op = Program::Instr::Op;

bool integer_literal(const Expr& e, int& out) {
  double v = 0.0;
  if (e.kind() == Expr::Kind::Number) {
    v = e.number_value();
  } else if (e.kind() == Expr::Kind::Neg && e.children()[0].kind() == Expr::Kind::Number) {
    v = -e.children()[0].number_value();
  } else {
    return false;
  }
  if (v != std::floor(v) || std::abs(v) > 64) return false;
  out = static_cast<int>(v);
  return true;
}

void emit(const Expr& e, std::span<const std::string> vars,
          std::vector<Program::Instr>& tape, int depth, int& max_depth) {
  max_depth = std::max(max_depth, depth + 1);
  const auto& k = e.children();
  switch (e.kind()) {
    case Expr::Kind::Number:
      tape.push_back({Op::Const, e.number_value(), 0});
      return;
    case Expr::Kind::Variable: {
      for (std::size_t i = 0; i < vars.size(); ++i) {
        if (vars[i] == e.name()) {
          tape.push_back({Op::Var, 0.0, static_cast<int>(i)});
          return;
        }
      }
      throw Error(ErrorCode::UnboundVariable, "unbound variable '" + e.name() + "'");
    }
    case Expr::Kind::Neg:
      emit(k[0], vars, tape, depth, max_depth);
      tape.push_back({Op::Neg});
      return;
    case Expr::Kind::Pow: {
      emit(k[0], vars, tape, depth, max_depth);
      int n = 0;
      if (integer_literal(k[1], n)) {
        tape.push_back({Op::PowInt, 0.0, n});
      } else if (k[1].kind() == Expr::Kind::Number) {
        tape.push_back({Op::PowConst, k[1].number_value(), 0});
      } else {
        emit(k[1], vars, tape, depth + 1, max_depth);
        tape.push_back({Op::PowGeneral});
      }
      return;
    }
    case Expr::Kind::Call: {
      for (std::size_t i = 0; i < k.size(); ++i)
        emit(k[i], vars, tape, depth + static_cast<int>(i), max_depth);
      static constexpr Op ops[] = {Op::Sin, Op::Cos, Op::Tan, Op::Exp,
                                   Op::Log, Op::Sqrt, Op::Atan2};
      tape.push_back({ops[static_cast<int>(e.func())]});
      return;
    }
    default: break;
  }
  emit(k[0], vars, tape, depth, max_depth);
  emit(k[1], vars, tape, depth + 1, max_depth);
  const Op op = e.kind() == Expr::Kind::Add   ? Op::Add
                : e.kind() == Expr::Kind::Sub ? Op::Sub
                : e.kind() == Expr::Kind::Mul ? Op::Mul
                                              : Op::Div;
  tape.push_back({op});
}

// The two nesting levels round differently; mixed partials are averaged so
// the returned Hessian is exactly symmetric.
void symmetrize(Eigen::Ref<Eigen::MatrixXd> h) {
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    for (Eigen::Index j = i + 1; j < h.cols(); ++j) h(i, j) = h(j, i) = 0.5 * (h(i, j) + h(j, i));
}

[[noreturn]] void domain_error(const char* what) {
  throw Error(ErrorCode::Domain, what);
}

}  // namespace

Program::Program(const Expr& e, std::span<const std::string> variables)
    : arity_(variables.size()) {
  emit(e, variables, tape_, 0, max_stack_);
}

template <class T>
T Program::exec(std::span<const T> args) const {
  thread_local std::vector<T> stack;
  if (stack.size() < static_cast<std::size_t>(max_stack_) + 1) stack.resize(max_stack_ + 1);
  int top = -1;
  for (const Instr& in : tape_) {
    switch (in.op) {
      case Op::Const: stack[++top] = T(in.c); break;
      case Op::Var: stack[++top] = args[in.i]; break;
      case Op::Neg: stack[top] = -stack[top]; break;
      case Op::Add: stack[top - 1] = stack[top - 1] + stack[top]; --top; break;
      case Op::Sub: stack[top - 1] = stack[top - 1] - stack[top]; --top; break;
      case Op::Mul: stack[top - 1] = stack[top - 1] * stack[top]; --top; break;
      case Op::Div:
        if (value_of(stack[top]) == 0.0) domain_error("division by zero");
        stack[top - 1] = stack[top - 1] / stack[top];
        --top;
        break;
      case Op::PowInt: {
        const int n = in.i < 0 ? -in.i : in.i;
        T r(1.0);
        if (n > 0) {
          r = stack[top];
          for (int j = 1; j < n; ++j) r = r * stack[top];
        }
        if (in.i < 0) {
          if (value_of(r) == 0.0) domain_error("division by zero in negative power");
          r = T(1.0) / r;
        }
        stack[top] = r;
        break;
      }
      case Op::PowConst: {
        const double b = value_of(stack[top]);
        if (b < 0.0) domain_error("real exponent of a negative base");
        if (b == 0.0 && in.c < 0.0) domain_error("division by zero in negative power");
        using std::pow;
        stack[top] = pow(stack[top], in.c);
        break;
      }
      case Op::PowGeneral: {
        if (value_of(stack[top - 1]) <= 0.0) domain_error("real exponent of a non-positive base");
        using std::exp;
        using std::log;
        stack[top - 1] = exp(stack[top] * log(stack[top - 1]));
        --top;
        break;
      }
      case Op::Sin: { using std::sin; stack[top] = sin(stack[top]); break; }
      case Op::Cos: { using std::cos; stack[top] = cos(stack[top]); break; }
      case Op::Tan: { using std::tan; stack[top] = tan(stack[top]); break; }
      case Op::Exp: { using std::exp; stack[top] = exp(stack[top]); break; }
      case Op::Log: {
        if (value_of(stack[top]) <= 0.0) domain_error("log of a non-positive argument");
        using std::log;
        stack[top] = log(stack[top]);
        break;
      }
      case Op::Sqrt: {
        if (value_of(stack[top]) < 0.0) domain_error("sqrt of a negative argument");
        using std::sqrt;
        stack[top] = sqrt(stack[top]);
        break;
      }
      case Op::Atan2: {
        using std::atan2;
        stack[top - 1] = atan2(stack[top - 1], stack[top]);
        --top;
        break;
      }
    }
  }
  return stack[0];
}

double Program::run(std::span<const double> args) const { return exec(args); }
Dual<double> Program::run(std::span<const Dual<double>> args) const { return exec(args); }
Dual<Dual<double>> Program::run(std::span<const Dual<Dual<double>>> args) const {
  return exec(args);
}

double Program::gradient(std::span<const double> x, Eigen::Ref<Eigen::VectorXd> grad) const {
  const int n = static_cast<int>(x.size());
  if (x.size() > kMaxSeeds) throw Error(ErrorCode::InvalidArgument, "too many seed variables");
  std::array<Dual<double>, kMaxSeeds> a;
  for (int i = 0; i < n; ++i) a[i] = Dual<double>::seed(x[i], n, i);
  const Dual<double> r = exec(std::span<const Dual<double>>(a.data(), x.size()));
  for (int i = 0; i < n; ++i) grad[i] = i < r.n ? r.d[i] : 0.0;
  return r.v;
}

double Program::hessian(std::span<const double> x, Eigen::Ref<Eigen::VectorXd> grad,
                        Eigen::Ref<Eigen::MatrixXd> hess) const {
  using D2 = Dual<Dual<double>>;
  const int n = static_cast<int>(x.size());
  if (x.size() > kMaxSeeds) throw Error(ErrorCode::InvalidArgument, "too many seed variables");
  std::array<D2, kMaxSeeds> a;
  for (int i = 0; i < n; ++i) {
    a[i] = D2::seed(Dual<double>::seed(x[i], n, i), n, i);
    for (int j = 0; j < n; ++j) a[i].d[j] = Dual<double>(j == i ? 1.0 : 0.0, n);
  }
  const D2 r = exec(std::span<const D2>(a.data(), x.size()));
  for (int i = 0; i < n; ++i) {
    grad[i] = i < r.v.n ? r.v.d[i] : 0.0;
    for (int j = 0; j < n; ++j) hess(i, j) = (i < r.n && j < r.d[i].n) ? r.d[i].d[j] : 0.0;
  }
  symmetrize(hess);
  return r.v.v;
}

namespace {

// Orders variables as `wrt` first, then any remaining free variables.
std::vector<std::string> variable_order(const Expr& e, const Bindings& b,
                                        std::span<const std::string> wrt,
                                        std::vector<double>& values) {
  std::vector<std::string> vars(wrt.begin(), wrt.end());
  for (const auto& v : e.free_variables())
    if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
  values.clear();
  for (const auto& v : vars) {
    auto it = b.find(v);
    if (it == b.end()) throw Error(ErrorCode::UnboundVariable, "unbound variable '" + v + "'");
    values.push_back(it->second);
  }
  return vars;
}

}  // namespace

double eval(const Expr& e, const Bindings& bindings) {
  std::vector<double> values;
  const auto vars = variable_order(e, bindings, {}, values);
  return Program(e, vars).run(values);
}

Partials derivative(const Expr& e, const Bindings& bindings,
                    std::span<const std::string> wrt, int order) {
  if (order != 1 && order != 2)
    throw Error(ErrorCode::InvalidArgument, "derivative order must be 1 or 2");
  if (wrt.size() > kMaxSeeds) throw Error(ErrorCode::InvalidArgument, "too many seed variables");
  std::vector<double> values;
  const auto vars = variable_order(e, bindings, wrt, values);
  const Program prog(e, vars);
  const int n = static_cast<int>(wrt.size());
  Partials out;
  out.gradient = Eigen::VectorXd::Zero(n);
  if (order == 1) {
    std::vector<Dual<double>> a(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i)
      a[i] = static_cast<int>(i) < n ? Dual<double>::seed(values[i], n, static_cast<int>(i))
                                     : Dual<double>(values[i], n);
    const Dual<double> r = prog.run(std::span<const Dual<double>>(a));
    out.value = r.v;
    for (int i = 0; i < n && i < r.n; ++i) out.gradient[i] = r.d[i];
    return out;
  }
  using D2 = Dual<Dual<double>>;
  std::vector<D2> a(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const int ii = static_cast<int>(i);
    if (ii < n) {
      a[i] = D2::seed(Dual<double>::seed(values[i], n, ii), n, ii);
      for (int j = 0; j < n; ++j) a[i].d[j] = Dual<double>(j == ii ? 1.0 : 0.0, n);
    } else {
      a[i] = D2(Dual<double>(values[i], n), n);
    }
  }
  const D2 r = prog.run(std::span<const D2>(a));
  out.value = r.v.v;
  out.hessian = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    out.gradient[i] = i < r.v.n ? r.v.d[i] : 0.0;
    for (int j = 0; j < n; ++j)
      out.hessian(i, j) = (i < r.n && j < r.d[i].n) ? r.d[i].d[j] : 0.0;
  }
  symmetrize(out.hessian);
  return out;
}

}  // namespace harmsec
