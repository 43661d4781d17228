#include "evoforge/hdsl.hpp"

#include <array>
#include <cassert>
#include <charconv>
#include <cmath>
#include <functional>

namespace evoforge::hdsl {

ExprPtr make_number(double value) {
    assert(std::isfinite(value));
    auto e = std::make_shared<Expr>();
    e->kind = NodeKind::Number;
    e->number = value == 0.0 ? 0.0 : value; // normalize -0.0
    return e;
}

ExprPtr make_var(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = NodeKind::Var;
    e->name = std::move(name);
    return e;
}

ExprPtr make_neg(ExprPtr operand) {
    auto e = std::make_shared<Expr>();
    e->kind = NodeKind::Neg;
    e->args = {std::move(operand)};
    return e;
}

ExprPtr make_binary(NodeKind op, ExprPtr lhs, ExprPtr rhs) {
    assert(op == NodeKind::Add || op == NodeKind::Sub || op == NodeKind::Mul ||
           op == NodeKind::Div);
    auto e = std::make_shared<Expr>();
    e->kind = op;
    e->args = {std::move(lhs), std::move(rhs)};
    return e;
}

ExprPtr make_call(Fn fn, std::vector<ExprPtr> args) {
    assert(static_cast<int>(args.size()) == arity(fn));
    auto e = std::make_shared<Expr>();
    e->kind = NodeKind::Call;
    e->fn = fn;
    e->args = std::move(args);
    return e;
}

int arity(Fn fn) {
    switch (fn) {
    case Fn::Abs:
    case Fn::Log:
    case Fn::Exp:
        return 1;
    case Fn::If:
        return 3;
    default:
        return 2;
    }
}

std::string_view fn_name(Fn fn) {
    switch (fn) {
    case Fn::Min: return "min";
    case Fn::Max: return "max";
    case Fn::Abs: return "abs";
    case Fn::Log: return "log";
    case Fn::Exp: return "exp";
    case Fn::Pow: return "pow";
    case Fn::If:  return "if";
    case Fn::Lt:  return "lt";
    case Fn::Le:  return "le";
    case Fn::Gt:  return "gt";
    case Fn::Ge:  return "ge";
    case Fn::Eq:  return "eq";
    }
    return "?";
}

std::optional<Fn> fn_from_name(std::string_view name) {
    static const std::array<Fn, 12> all = {Fn::Min, Fn::Max, Fn::Abs, Fn::Log,
                                           Fn::Exp, Fn::Pow, Fn::If,  Fn::Lt,
                                           Fn::Le,  Fn::Gt,  Fn::Ge,  Fn::Eq};
    for (Fn f : all) {
        if (fn_name(f) == name) {
            return f;
        }
    }
    return std::nullopt;
}

ParseError::ParseError(std::size_t position, const std::string& what)
    : std::runtime_error(what + " (at position " + std::to_string(position) + ")"),
      position_(position) {}

UnboundVariableError::UnboundVariableError(const std::string& name)
    : std::runtime_error("unbound variable '" + name + "'"), name_(name) {}

EvalEnv::EvalEnv(std::initializer_list<std::pair<const std::string, double>> init) {
    for (const auto& [k, v] : init) {
        set(k, v);
    }
}

void EvalEnv::set(const std::string& name, double value) {
    if (!std::isfinite(value)) {
        throw DomainError("environment value for '" + name + "' is not finite");
    }
    values_[name] = value;
}

std::optional<double> EvalEnv::get(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) {
        return std::nullopt;
    }
    return it->second;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class TokKind { Number, Ident, Plus, Minus, Star, Slash, LParen, RParen, Comma, End };

struct Token {
    TokKind kind;
    std::size_t pos;
    std::string text;
    double value = 0.0;
};

bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
}

std::vector<Token> lex(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            continue;
        }
        if (c >= '0' && c <= '9') {
            std::size_t start = i;
            while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
            if (i < text.size() && text[i] == '.') {
                ++i;
                while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
            }
            if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
                std::size_t mark = i;
                ++i;
                if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
                if (i < text.size() && text[i] >= '0' && text[i] <= '9') {
                    while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
                } else {
                    i = mark; // 'e' was not an exponent; leave it for the ident lexer
                }
            }
            double value = 0.0;
            auto res = std::from_chars(text.data() + start, text.data() + i, value);
            if (res.ec != std::errc{} || !std::isfinite(value)) {
                throw ParseError(start, "number literal out of range");
            }
            out.push_back({TokKind::Number, start, std::string(text.substr(start, i - start)), value});
            continue;
        }
        if (is_ident_start(c)) {
            std::size_t start = i;
            while (i < text.size() && is_ident_char(text[i])) ++i;
            out.push_back({TokKind::Ident, start, std::string(text.substr(start, i - start))});
            continue;
        }
        TokKind kind;
        switch (c) {
        case '+': kind = TokKind::Plus; break;
        case '-': kind = TokKind::Minus; break;
        case '*': kind = TokKind::Star; break;
        case '/': kind = TokKind::Slash; break;
        case '(': kind = TokKind::LParen; break;
        case ')': kind = TokKind::RParen; break;
        case ',': kind = TokKind::Comma; break;
        default:
            throw ParseError(i, std::string("unexpected character '") + c + "'");
        }
        out.push_back({kind, i, std::string(1, c)});
        ++i;
    }
    out.push_back({TokKind::End, text.size(), ""});
    return out;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser

class Parser {
  public:
    explicit Parser(std::string_view text) : tokens_(lex(text)) {}

    ExprPtr parse_all() {
        ExprPtr e = parse_sum();
        if (peek().kind != TokKind::End) {
            throw ParseError(peek().pos, "unexpected trailing input");
        }
        return e;
    }

  private:
    const Token& peek() const { return tokens_[idx_]; }
    Token take() { return tokens_[idx_++]; }

    void expect(TokKind kind, const char* what) {
        if (peek().kind != kind) {
            if (peek().kind == TokKind::End) {
                throw ParseError(peek().pos, std::string("syntax error at end of input, expected ") + what);
            }
            throw ParseError(peek().pos, std::string("expected ") + what);
        }
        ++idx_;
    }

    ExprPtr parse_sum() {
        ExprPtr lhs = parse_term();
        while (peek().kind == TokKind::Plus || peek().kind == TokKind::Minus) {
            const bool add = take().kind == TokKind::Plus;
            ExprPtr rhs = parse_term();
            lhs = make_binary(add ? NodeKind::Add : NodeKind::Sub, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_unary();
        while (peek().kind == TokKind::Star || peek().kind == TokKind::Slash) {
            const bool mul = take().kind == TokKind::Star;
            ExprPtr rhs = parse_unary();
            lhs = make_binary(mul ? NodeKind::Mul : NodeKind::Div, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (peek().kind == TokKind::Minus) {
            ++idx_;
            return make_neg(parse_unary());
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        const Token& tok = peek();
        switch (tok.kind) {
        case TokKind::Number: {
            Token t = take();
            return make_number(t.value);
        }
        case TokKind::Ident: {
            Token t = take();
            if (peek().kind != TokKind::LParen) {
                return make_var(t.text);
            }
            auto fn = fn_from_name(t.text);
            if (!fn) {
                throw ParseError(t.pos, "unknown function name '" + t.text + "'");
            }
            ++idx_; // '('
            std::vector<ExprPtr> args;
            if (peek().kind != TokKind::RParen) {
                args.push_back(parse_sum());
                while (peek().kind == TokKind::Comma) {
                    ++idx_;
                    args.push_back(parse_sum());
                }
            }
            expect(TokKind::RParen, "')'");
            if (static_cast<int>(args.size()) != arity(*fn)) {
                throw ParseError(t.pos, "function '" + t.text + "' expects " +
                                            std::to_string(arity(*fn)) + " argument(s), got " +
                                            std::to_string(args.size()));
            }
            return make_call(*fn, std::move(args));
        }
        case TokKind::LParen: {
            ++idx_;
            ExprPtr e = parse_sum();
            expect(TokKind::RParen, "')'");
            return e;
        }
        case TokKind::End:
            throw ParseError(tok.pos, "syntax error at end of input, expected an expression");
        default:
            throw ParseError(tok.pos, "expected an expression");
        }
    }

    std::vector<Token> tokens_;
    std::size_t idx_ = 0;
};

} // namespace

ExprPtr parse(std::string_view text, int max_size) {
    ExprPtr e = Parser(text).parse_all();
    const int size = complexity(e);
    if (size > max_size) {
        throw ParseError(0, "expression has " + std::to_string(size) + " nodes, limit is " +
                                std::to_string(max_size));
    }
    return e;
}

// ---------------------------------------------------------------------------
// Printer

namespace {

// Precedence: add/sub = 1, mul/div = 2, unary minus = 3, atoms = 4.
int precedence(const Expr& e) {
    switch (e.kind) {
    case NodeKind::Add:
    case NodeKind::Sub:
        return 1;
    case NodeKind::Mul:
    case NodeKind::Div:
        return 2;
    case NodeKind::Neg:
        return 3;
    default:
        return 4;
    }
}

std::string number_text(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void print_rec(const Expr& e, int min_prec, std::string& out) {
    const int prec = precedence(e);
    const bool parens = prec < min_prec;
    if (parens) {
        out += '(';
    }
    switch (e.kind) {
    case NodeKind::Number:
        out += number_text(e.number);
        break;
    case NodeKind::Var:
        out += e.name;
        break;
    case NodeKind::Neg:
        out += '-';
        print_rec(*e.args[0], prec, out);
        break;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
        const char op = e.kind == NodeKind::Add   ? '+'
                        : e.kind == NodeKind::Sub ? '-'
                        : e.kind == NodeKind::Mul ? '*'
                                                  : '/';
        print_rec(*e.args[0], prec, out);
        out += ' ';
        out += op;
        out += ' ';
        // Left associativity: the right child needs strictly higher precedence
        // to stay unparenthesized, otherwise a - (b - c) would reparse as
        // (a - b) - c.
        print_rec(*e.args[1], prec + 1, out);
        break;
    }
    case NodeKind::Call: {
        out += fn_name(e.fn);
        out += '(';
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (i > 0) {
                out += ", ";
            }
            print_rec(*e.args[i], 0, out);
        }
        out += ')';
        break;
    }
    }
    if (parens) {
        out += ')';
    }
}

} // namespace

std::string print(const ExprPtr& expr) {
    std::string out;
    print_rec(*expr, 0, out);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluator

namespace {

double checked(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw DomainError(std::string("non-finite result from ") + what);
    }
    return v;
}

double eval_rec(const Expr& e, const EvalEnv& env) {
    switch (e.kind) {
    case NodeKind::Number:
        return e.number;
    case NodeKind::Var: {
        auto v = env.get(e.name);
        if (!v) {
            throw UnboundVariableError(e.name);
        }
        return *v;
    }
    case NodeKind::Neg:
        return -eval_rec(*e.args[0], env);
    case NodeKind::Add:
        return checked(eval_rec(*e.args[0], env) + eval_rec(*e.args[1], env), "addition");
    case NodeKind::Sub:
        return checked(eval_rec(*e.args[0], env) - eval_rec(*e.args[1], env), "subtraction");
    case NodeKind::Mul:
        return checked(eval_rec(*e.args[0], env) * eval_rec(*e.args[1], env), "multiplication");
    case NodeKind::Div: {
        const double num = eval_rec(*e.args[0], env);
        const double den = eval_rec(*e.args[1], env);
        if (den == 0.0) {
            throw DomainError("division by zero");
        }
        return checked(num / den, "division");
    }
    case NodeKind::Call: {
        switch (e.fn) {
        case Fn::Min:
            return std::min(eval_rec(*e.args[0], env), eval_rec(*e.args[1], env));
        case Fn::Max:
            return std::max(eval_rec(*e.args[0], env), eval_rec(*e.args[1], env));
        case Fn::Abs:
            return std::fabs(eval_rec(*e.args[0], env));
        case Fn::Log: {
            const double x = eval_rec(*e.args[0], env);
            if (x <= 0.0) {
                throw DomainError("log of non-positive value");
            }
            return checked(std::log(x), "log");
        }
        case Fn::Exp:
            return checked(std::exp(eval_rec(*e.args[0], env)), "exp");
        case Fn::Pow:
            return checked(std::pow(eval_rec(*e.args[0], env), eval_rec(*e.args[1], env)), "pow");
        case Fn::If:
            // Only the selected branch is evaluated, so guards like
            // if(ge(cap, item), a / b, 0) work as expected.
            return eval_rec(*e.args[0], env) != 0.0 ? eval_rec(*e.args[1], env)
                                                    : eval_rec(*e.args[2], env);
        case Fn::Lt:
            return eval_rec(*e.args[0], env) < eval_rec(*e.args[1], env) ? 1.0 : 0.0;
        case Fn::Le:
            return eval_rec(*e.args[0], env) <= eval_rec(*e.args[1], env) ? 1.0 : 0.0;
        case Fn::Gt:
            return eval_rec(*e.args[0], env) > eval_rec(*e.args[1], env) ? 1.0 : 0.0;
        case Fn::Ge:
            return eval_rec(*e.args[0], env) >= eval_rec(*e.args[1], env) ? 1.0 : 0.0;
        case Fn::Eq:
            return eval_rec(*e.args[0], env) == eval_rec(*e.args[1], env) ? 1.0 : 0.0;
        }
        throw DomainError("unknown function");
    }
    }
    throw DomainError("unknown node kind");
}

} // namespace

double eval(const ExprPtr& expr, const EvalEnv& env) {
    return checked(eval_rec(*expr, env), "expression");
}

int complexity(const ExprPtr& expr) {
    int count = 1;
    for (const auto& arg : expr->args) {
        count += complexity(arg);
    }
    return count;
}

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a->kind != b->kind || a->args.size() != b->args.size()) {
        return false;
    }
    switch (a->kind) {
    case NodeKind::Number:
        if (a->number != b->number) return false;
        break;
    case NodeKind::Var:
        if (a->name != b->name) return false;
        break;
    case NodeKind::Call:
        if (a->fn != b->fn) return false;
        break;
    default:
        break;
    }
    for (std::size_t i = 0; i < a->args.size(); ++i) {
        if (!structurally_equal(a->args[i], b->args[i])) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Random generation and mutation

namespace {

ExprPtr random_leaf(Rng& rng, std::span<const std::string> vars) {
    if (!vars.empty() && coin_flip(rng)) {
        return make_var(vars[pick_index(rng, vars.size())]);
    }
    // Keep literals small; they get scaled by perturbation anyway.
    return make_number(uniform_real(rng, 0.0, 10.0));
}

} // namespace

ExprPtr random_expr(Rng& rng, std::span<const std::string> vars, int max_depth) {
    if (max_depth <= 0) {
        return random_leaf(rng, vars);
    }
    switch (uniform_below(rng, 9)) {
    case 0:
    case 1:
        return random_leaf(rng, vars);
    case 2:
        return make_neg(random_expr(rng, vars, max_depth - 1));
    case 3:
        return make_binary(NodeKind::Add, random_expr(rng, vars, max_depth - 1),
                           random_expr(rng, vars, max_depth - 1));
    case 4:
        return make_binary(NodeKind::Sub, random_expr(rng, vars, max_depth - 1),
                           random_expr(rng, vars, max_depth - 1));
    case 5:
        return make_binary(NodeKind::Mul, random_expr(rng, vars, max_depth - 1),
                           random_expr(rng, vars, max_depth - 1));
    case 6:
        return make_call(Fn::Min, {random_expr(rng, vars, max_depth - 1),
                                   random_expr(rng, vars, max_depth - 1)});
    case 7:
        return make_call(Fn::Max, {random_expr(rng, vars, max_depth - 1),
                                   random_expr(rng, vars, max_depth - 1)});
    default:
        return make_call(Fn::Abs, {random_expr(rng, vars, max_depth - 1)});
    }
}

namespace {

void collect_indices(const Expr& e, int& next, std::vector<int>& numbers,
                     std::vector<int>& binaries, std::vector<int>& leaves) {
    const int idx = next++;
    switch (e.kind) {
    case NodeKind::Number:
        numbers.push_back(idx);
        leaves.push_back(idx);
        break;
    case NodeKind::Var:
        leaves.push_back(idx);
        break;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
        binaries.push_back(idx);
        break;
    default:
        break;
    }
    for (const auto& arg : e.args) {
        collect_indices(*arg, next, numbers, binaries, leaves);
    }
}

// Rebuilds the path to the preorder index `target`, applying `edit` there.
ExprPtr replace_at(const ExprPtr& node, int& next, int target,
                   const std::function<ExprPtr(const ExprPtr&)>& edit) {
    const int idx = next++;
    if (idx == target) {
        return edit(node);
    }
    if (node->args.empty()) {
        return node;
    }
    auto copy = std::make_shared<Expr>(*node);
    for (auto& arg : copy->args) {
        arg = replace_at(arg, next, target, edit);
    }
    return copy;
}

ExprPtr apply_at(const ExprPtr& root, int target,
                 const std::function<ExprPtr(const ExprPtr&)>& edit) {
    int next = 0;
    return replace_at(root, next, target, edit);
}

NodeKind swapped_operator(Rng& rng, NodeKind current) {
    static const std::array<NodeKind, 4> ops = {NodeKind::Add, NodeKind::Sub, NodeKind::Mul,
                                                NodeKind::Div};
    std::array<NodeKind, 3> others{};
    std::size_t n = 0;
    for (NodeKind op : ops) {
        if (op != current) {
            others[n++] = op;
        }
    }
    return others[pick_index(rng, n)];
}

} // namespace

ExprPtr mutate(const ExprPtr& expr, Rng& rng, std::span<const std::string> vars, int max_size) {
    std::vector<int> numbers, binaries, leaves;
    int next = 0;
    collect_indices(*expr, next, numbers, binaries, leaves);

    enum Edit { Perturb, OpSwap, LeafReplace, SubtreeReplace };
    std::vector<Edit> available;
    if (!numbers.empty()) available.push_back(Perturb);
    if (!binaries.empty()) available.push_back(OpSwap);
    available.push_back(LeafReplace);
    available.push_back(SubtreeReplace);

    const auto leaf_replace = [&]() {
        const int target = leaves[pick_index(rng, leaves.size())];
        ExprPtr leaf = random_leaf(rng, vars);
        return apply_at(expr, target, [&](const ExprPtr&) { return leaf; });
    };

    switch (available[pick_index(rng, available.size())]) {
    case Perturb: {
        const int target = numbers[pick_index(rng, numbers.size())];
        const double factor = uniform_real(rng, 0.5, 1.5);
        return apply_at(expr, target, [&](const ExprPtr& node) {
            return make_number(node->number * factor);
        });
    }
    case OpSwap: {
        const int target = binaries[pick_index(rng, binaries.size())];
        return apply_at(expr, target, [&](const ExprPtr& node) {
            return make_binary(swapped_operator(rng, node->kind), node->args[0], node->args[1]);
        });
    }
    case LeafReplace:
        return leaf_replace();
    case SubtreeReplace: {
        const int total = complexity(expr);
        for (int attempt = 0; attempt < 8; ++attempt) {
            const int target = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(total)));
            ExprPtr sub = random_expr(rng, vars, 2);
            ExprPtr result = apply_at(expr, target, [&](const ExprPtr&) { return sub; });
            if (complexity(result) <= max_size) {
                return result;
            }
        }
        return leaf_replace(); // never grows, so the size bound holds
    }
    }
    return expr;
}

} // namespace evoforge::hdsl
