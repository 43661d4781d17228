#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evoforge/rng.hpp"

// Heuristic expression DSL: arithmetic over named problem variables with a
// small set of functions. Comparisons return 1.0/0.0 and if() tests non-zero,
// so the whole language lives in one value domain (finite doubles).
namespace evoforge::hdsl {

enum class NodeKind { Number, Var, Neg, Add, Sub, Mul, Div, Call };

enum class Fn { Min, Max, Abs, Log, Exp, Pow, If, Lt, Le, Gt, Ge, Eq };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable AST node. Mutation rebuilds the spine and shares untouched
// subtrees, so copies are cheap and concurrent reads are safe.
struct Expr {
    NodeKind kind;
    double number = 0.0;           // Number
    std::string name;              // Var
    Fn fn = Fn::Min;               // Call
    std::vector<ExprPtr> args;     // children (1 Neg, 2 binary, arity(fn) Call)
};

ExprPtr make_number(double value);
ExprPtr make_var(std::string name);
ExprPtr make_neg(ExprPtr operand);
ExprPtr make_binary(NodeKind op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_call(Fn fn, std::vector<ExprPtr> args);

int arity(Fn fn);
std::string_view fn_name(Fn fn);
std::optional<Fn> fn_from_name(std::string_view name);

inline constexpr int kDefaultMaxSize = 64;

class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t position, const std::string& what);
    std::size_t position() const { return position_; }

  private:
    std::size_t position_;
};

class UnboundVariableError : public std::runtime_error {
  public:
    explicit UnboundVariableError(const std::string& name);
    const std::string& variable() const { return name_; }

  private:
    std::string name_;
};

class DomainError : public std::runtime_error {
  public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Variable bindings for eval. Values must be finite.
class EvalEnv {
  public:
    EvalEnv() = default;
    EvalEnv(std::initializer_list<std::pair<const std::string, double>> init);

    void set(const std::string& name, double value); // rejects non-finite
    std::optional<double> get(const std::string& name) const;

  private:
    std::map<std::string, double> values_;
};

// Parses the expression grammar: unary minus > mul/div > add/sub, left
// associative, comparisons and conditionals only via named functions.
// Throws ParseError with a byte position for lexical errors, syntax errors,
// unknown function names, wrong arities, and expressions larger than
// max_size nodes.
ExprPtr parse(std::string_view text, int max_size = kDefaultMaxSize);

// Canonical form: minimal parentheses, single spaces around binary operators,
// ", " between call arguments, shortest round-trip number literals.
// parse(print(e)) is structurally equal to e and print is idempotent.
std::string print(const ExprPtr& expr);

// IEEE double evaluation. Throws UnboundVariableError for missing bindings
// and DomainError for division by zero, log(x <= 0), and any non-finite
// result. if() evaluates only the selected branch.
double eval(const ExprPtr& expr, const EvalEnv& env);

// Total AST node count.
int complexity(const ExprPtr& expr);

bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

// Random expression of depth <= max_depth over vars (used by mutate and by
// population seeding). Avoids Div/Log/Pow/If so fresh material usually
// evaluates cleanly; mutation can still swap operators into Div.
ExprPtr random_expr(Rng& rng, std::span<const std::string> vars, int max_depth);

// One seeded edit: perturb a number (x U(0.5,1.5)), swap a binary operator,
// replace a leaf, or replace a subtree with a random depth<=2 expression.
// Retries a bounded number of times if the result would exceed max_size and
// falls back to leaf replacement, so the size bound always holds.
ExprPtr mutate(const ExprPtr& expr, Rng& rng, std::span<const std::string> vars,
               int max_size = kDefaultMaxSize);

} // namespace evoforge::hdsl
