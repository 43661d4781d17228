#include <doctest.h>

#include <cmath>

#include "evoforge/hdsl.hpp"

using namespace evoforge;
using namespace evoforge::hdsl;

namespace {

// Test-local generator covering every node kind and function, independent of
// the library's random_expr. Used for the round-trip property corpus.
ExprPtr arbitrary_expr(Rng& rng, int depth) {
    static const std::vector<std::string> vars = {"cap", "item", "index", "n_bins", "x"};
    if (depth <= 0 || uniform_below(rng, 4) == 0) {
        if (coin_flip(rng)) {
            return make_var(vars[pick_index(rng, vars.size())]);
        }
        return make_number(uniform_real(rng, 0.0, 1e6));
    }
    switch (uniform_below(rng, 18)) {
    case 0: return make_neg(arbitrary_expr(rng, depth - 1));
    case 1: return make_binary(NodeKind::Add, arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1));
    case 2: return make_binary(NodeKind::Sub, arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1));
    case 3: return make_binary(NodeKind::Mul, arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1));
    case 4: return make_binary(NodeKind::Div, arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1));
    case 5: return make_call(Fn::Min, {arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1)});
    case 6: return make_call(Fn::Max, {arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1)});
    case 7: return make_call(Fn::Abs, {arbitrary_expr(rng, depth - 1)});
    case 8: return make_call(Fn::Log, {arbitrary_expr(rng, depth - 1)});
    case 9: return make_call(Fn::Exp, {arbitrary_expr(rng, depth - 1)});
    case 10: return make_call(Fn::Pow, {arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1)});
    case 11: return make_call(Fn::If, {arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1)});
    case 12: return make_call(Fn::Lt, {arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1)});
    case 13: return make_call(Fn::Le, {arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1)});
    case 14: return make_call(Fn::Gt, {arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1)});
    case 15: return make_call(Fn::Ge, {arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1)});
    case 16: return make_call(Fn::Eq, {arbitrary_expr(rng, depth - 1), arbitrary_expr(rng, depth - 1)});
    default: return make_neg(make_neg(arbitrary_expr(rng, depth - 1)));
    }
}

} // namespace

TEST_CASE("parse follows precedence and associativity") {
    ExprPtr e = parse("cap - item * 2");
    REQUIRE(e->kind == NodeKind::Sub);
    CHECK(e->args[0]->kind == NodeKind::Var);
    CHECK(e->args[0]->name == "cap");
    REQUIRE(e->args[1]->kind == NodeKind::Mul);
    CHECK(e->args[1]->args[0]->name == "item");
    CHECK(e->args[1]->args[1]->number == 2.0);

    ExprPtr neg = parse("-(cap - item)");
    REQUIRE(neg->kind == NodeKind::Neg);
    CHECK(neg->args[0]->kind == NodeKind::Sub);

    // Left associativity.
    ExprPtr chain = parse("1 - 2 - 3");
    REQUIRE(chain->kind == NodeKind::Sub);
    CHECK(chain->args[0]->kind == NodeKind::Sub);
    CHECK(chain->args[1]->number == 3.0);
}

TEST_CASE("parse reports position on errors") {
    CHECK_THROWS_AS(parse("min(cap, item"), ParseError);
    try {
        parse("min(cap, item");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position() == 13); // end of input
    }

    CHECK_THROWS_AS(parse("cap $ item"), ParseError);      // lexical
    CHECK_THROWS_AS(parse("foo(cap)"), ParseError);        // unknown function
    CHECK_THROWS_AS(parse("min(cap)"), ParseError);        // wrong arity
    CHECK_THROWS_AS(parse("min(cap, item))"), ParseError); // trailing input
    CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("parse enforces the node budget") {
    CHECK_THROWS_AS(parse("1 + 1 + 1 + 1", 5), ParseError);
    CHECK_NOTHROW(parse("1 + 1 + 1 + 1", 7));
}

TEST_CASE("print produces the canonical form") {
    CHECK(print(parse("cap-item*2")) == "cap - item * 2");
    CHECK(print(parse("-(cap - item)")) == "-(cap - item)");
    CHECK(print(make_binary(NodeKind::Mul, parse("cap - item"), make_number(2.0))) ==
          "(cap - item) * 2");
    CHECK(print(parse("min( cap ,item )*2")) == "min(cap, item) * 2");
    CHECK(print(parse("a - (b - c)")) == "a - (b - c)");
    CHECK(print(parse("a - b - c")) == "a - b - c");
}

TEST_CASE("eval matches the worked examples") {
    EvalEnv env{{"cap", 7.0}, {"item", 4.0}};
    CHECK(eval(parse("cap - item"), env) == 3.0);

    EvalEnv small{{"cap", 3.0}, {"item", 5.0}};
    CHECK(eval(parse("if(ge(cap, item), -(cap - item), -1000000)"), small) == -1000000.0);

    EvalEnv div{{"cap", 2.0}, {"item", 1.0}};
    CHECK_THROWS_AS(eval(parse("item / (cap - cap)"), div), DomainError);
}

TEST_CASE("eval error paths") {
    EvalEnv env{{"cap", 1.0}};
    CHECK_THROWS_AS(eval(parse("missing"), env), UnboundVariableError);
    CHECK_THROWS_AS(eval(parse("log(0 - cap)"), env), DomainError);
    CHECK_THROWS_AS(eval(parse("exp(10000)"), env), DomainError);     // overflow
    CHECK_THROWS_AS(eval(parse("pow(0 - 1, 0.5)"), env), DomainError); // NaN
    // if() only evaluates the selected branch, so guards work.
    CHECK(eval(parse("if(gt(cap, 0), cap, cap / 0)"), env) == 1.0);
}

TEST_CASE("booleans are 1.0/0.0 and if tests non-zero") {
    EvalEnv env{{"a", 2.0}, {"b", 3.0}};
    CHECK(eval(parse("lt(a, b)"), env) == 1.0);
    CHECK(eval(parse("gt(a, b)"), env) == 0.0);
    CHECK(eval(parse("le(a, a)"), env) == 1.0);
    CHECK(eval(parse("ge(a, b)"), env) == 0.0);
    CHECK(eval(parse("eq(a, a)"), env) == 1.0);
    CHECK(eval(parse("if(a - a, 10, 20)"), env) == 20.0);
    CHECK(eval(parse("if(a, 10, 20)"), env) == 10.0);
}

TEST_CASE("complexity counts every node") {
    CHECK(complexity(parse("cap")) == 1);
    CHECK(complexity(parse("cap - item")) == 3);
    CHECK(complexity(parse("min(cap, item) * 2")) == 5);
    CHECK(complexity(parse("-cap")) == 2);
}

TEST_CASE("eval is pure") {
    ExprPtr e = parse("min(cap, item) * 2 - cap / 3");
    EvalEnv env{{"cap", 7.5}, {"item", 3.25}};
    const double first = eval(e, env);
    for (int i = 0; i < 100; ++i) {
        CHECK(eval(e, env) == first); // bit-identical
    }
}

TEST_CASE("round trip and printer idempotence over a generated corpus") {
    Rng rng(2024);
    for (int i = 0; i < 2000; ++i) {
        ExprPtr e = arbitrary_expr(rng, 4);
        const std::string text = print(e);
        ExprPtr reparsed = parse(text, 1 << 20);
        CHECK(structurally_equal(e, reparsed));
        CHECK(print(reparsed) == text);
    }
}

TEST_CASE("mutate determinism and closure") {
    const std::vector<std::string> vars = {"cap", "item", "index", "n_bins"};
    ExprPtr base = parse("min(cap - item, 2 * index) + n_bins");

    // Same seed and input => identical output.
    Rng a(77), b(77);
    CHECK(print(mutate(base, a, vars)) == print(mutate(base, b, vars)));

    EvalEnv env{{"cap", 10.0}, {"item", 3.0}, {"index", 1.0}, {"n_bins", 2.0}};
    Rng rng(5);
    ExprPtr current = base;
    int domain_errors = 0;
    for (int i = 0; i < 10000; ++i) {
        current = mutate(current, rng, vars);
        CHECK(complexity(current) <= kDefaultMaxSize);
        const std::string text = print(current);
        ExprPtr reparsed = parse(text);
        CHECK(structurally_equal(current, reparsed));
        try {
            const double v = eval(current, env);
            CHECK(std::isfinite(v));
        } catch (const DomainError&) {
            ++domain_errors; // acceptable: callers map this to infeasible
        }
    }
    CHECK(domain_errors < 10000); // most mutants stay evaluable
}

TEST_CASE("mutate falls back rather than exceed the size bound") {
    const std::vector<std::string> vars = {"x"};
    ExprPtr e = parse("x");
    Rng rng(9);
    for (int i = 0; i < 5000; ++i) {
        e = mutate(e, rng, vars, 16);
        REQUIRE(complexity(e) <= 16);
    }
}

TEST_CASE("double negation round trips") {
    ExprPtr e = parse("--cap");
    REQUIRE(e->kind == NodeKind::Neg);
    REQUIRE(e->args[0]->kind == NodeKind::Neg);
    const std::string printed = print(e);
    CHECK(structurally_equal(parse(printed), e));
    CHECK(print(parse(printed)) == printed);
}

TEST_CASE("scientific notation literals round trip") {
    ExprPtr e = parse("1e+06 * cap");
    CHECK(e->args[0]->number == 1000000.0);
    ExprPtr big = make_binary(NodeKind::Mul, make_number(1000000.0), make_var("cap"));
    const std::string printed = print(big);
    CHECK(structurally_equal(parse(printed), big));
    ExprPtr tiny = make_number(9.5367431640625e-07);
    CHECK(structurally_equal(parse(print(tiny)), tiny));
}
