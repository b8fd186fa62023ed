#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "stopside/reward.hpp"

namespace stopside {

namespace {

enum class Op { Var, Const, Add, Sub, Mul, Div, Pow, Neg, Max, Exp, Ln, Pos };

struct Node {
    Op op;
    double value = 0.0;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
};

using NodePtr = std::shared_ptr<const Node>;

double eval(const Node& n, double x)
{
    switch (n.op) {
    case Op::Var: return x;
    case Op::Const: return n.value;
    case Op::Add: return eval(*n.a, x) + eval(*n.b, x);
    case Op::Sub: return eval(*n.a, x) - eval(*n.b, x);
    case Op::Mul: return eval(*n.a, x) * eval(*n.b, x);
    case Op::Div: return eval(*n.a, x) / eval(*n.b, x);
    case Op::Pow: return std::pow(eval(*n.a, x), n.value);
    case Op::Neg: return -eval(*n.a, x);
    case Op::Max: return std::max(eval(*n.a, x), eval(*n.b, x));
    case Op::Exp: return std::exp(eval(*n.a, x));
    case Op::Ln: return std::log(eval(*n.a, x));
    case Op::Pos: return std::max(eval(*n.a, x), 0.0);
    }
    return std::nan("");
}

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double value = 0.0)
{
    return std::make_shared<const Node>(Node{op, value, std::move(a), std::move(b)});
}

class Parser {
public:
    explicit Parser(const std::string& src) : src_(src) {}

    NodePtr parse()
    {
        NodePtr e = expression();
        skip_ws();
        if (pos_ != src_.size())
            fail("'+', '-', '*', '/', '^' or end of input");
        return e;
    }

private:
    const std::string& src_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& expected) const
    {
        std::string found = pos_ < src_.size() ? std::string("'") + src_[pos_] + "'" : "end of input";
        throw ParseError(pos_, expected,
                         "parse error at position " + std::to_string(pos_) + ": expected " + expected + ", found "
                             + found);
    }

    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c, const std::string& expected)
    {
        if (!accept(c))
            fail(expected);
    }

    NodePtr expression()
    {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make(Op::Add, lhs, term());
            else if (accept('-'))
                lhs = make(Op::Sub, lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term()
    {
        NodePtr lhs = factor();
        for (;;) {
            if (accept('*'))
                lhs = make(Op::Mul, lhs, factor());
            else if (accept('/'))
                lhs = make(Op::Div, lhs, factor());
            else
                return lhs;
        }
    }

    NodePtr factor()
    {
        if (accept('-'))
            return make(Op::Neg, factor());
        NodePtr base_node = base();
        if (accept('^')) {
            skip_ws();
            double p;
            if (!number(p))
                fail("number");
            return make(Op::Pow, base_node, nullptr, p);
        }
        return base_node;
    }

    bool number(double& out)
    {
        skip_ws();
        const char* begin = src_.c_str() + pos_;
        if (pos_ >= src_.size() || !(std::isdigit(static_cast<unsigned char>(*begin)) || *begin == '.'))
            return false;
        char* end = nullptr;
        out = std::strtod(begin, &end);
        if (end == begin)
            return false;
        pos_ += static_cast<std::size_t>(end - begin);
        return true;
    }

    NodePtr base()
    {
        skip_ws();
        double v;
        if (number(v))
            return make(Op::Const, nullptr, nullptr, v);
        if (accept('(')) {
            NodePtr e = expression();
            expect(')', "')'");
            return e;
        }
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        std::string word = src_.substr(start, pos_ - start);
        if (word == "x")
            return make(Op::Var);
        if (word == "max" || word == "exp" || word == "ln" || word == "pos") {
            expect('(', "'('");
            NodePtr arg = expression();
            if (word == "max") {
                expect(',', "','");
                NodePtr second = expression();
                expect(')', "')'");
                return make(Op::Max, arg, second);
            }
            expect(')', "')'");
            if (word == "exp")
                return make(Op::Exp, arg);
            if (word == "ln")
                return make(Op::Ln, arg);
            return make(Op::Pos, arg);
        }
        pos_ = start;
        fail("'x', number, '(', '-', or one of max, exp, ln, pos");
    }
};

// Functions whose sign changes mark kinks of the expression.
void collect_switches(const NodePtr& n, std::vector<ScalarFn>& out)
{
    if (!n)
        return;
    if (n->op == Op::Pos) {
        NodePtr a = n->a;
        out.push_back([a](double x) { return eval(*a, x); });
    } else if (n->op == Op::Max) {
        NodePtr a = n->a;
        NodePtr b = n->b;
        out.push_back([a, b](double x) { return eval(*a, x) - eval(*b, x); });
    }
    collect_switches(n->a, out);
    collect_switches(n->b, out);
}

std::vector<double> sign_changes(const ScalarFn& h, double lo, double hi, int samples)
{
    std::vector<double> roots;
    double xp = lo;
    double hp = h(lo);
    if (hp == 0.0)
        roots.push_back(lo);
    for (int i = 1; i < samples; ++i) {
        double x = lo + (hi - lo) * i / (samples - 1);
        double hx = h(x);
        if (hx == 0.0) {
            roots.push_back(x);
        } else if (std::isfinite(hp) && std::isfinite(hx) && hp != 0.0 && (hp < 0.0) != (hx < 0.0)) {
            double a = xp;
            double b = x;
            bool a_neg = hp < 0.0;
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (a + b);
                if (!(mid > a && mid < b))
                    break;
                double hm = h(mid);
                if (hm == 0.0) {
                    a = b = mid;
                    break;
                }
                if ((hm < 0.0) == a_neg)
                    a = mid;
                else
                    b = mid;
            }
            roots.push_back(0.5 * (a + b));
        }
        xp = x;
        hp = hx;
    }
    return roots;
}

}  // namespace

Reward parse_reward(const std::string& expr, double lo, double hi)
{
    if (!(lo < hi))
        throw Error(ErrorKind::InvalidArgument, "reward sampling window needs lo < hi");
    Parser parser(expr);
    NodePtr root = parser.parse();

    Reward rw;
    rw.description = expr;
    rw.g = [root](double x) { return eval(*root, x); };

    std::vector<ScalarFn> switches;
    collect_switches(root, switches);
    for (const auto& h : switches)
        for (double k : sign_changes(h, lo, hi, 4001))
            rw.kinks.push_back(k);
    std::sort(rw.kinks.begin(), rw.kinks.end());
    rw.kinks.erase(std::unique(rw.kinks.begin(), rw.kinks.end()), rw.kinks.end());

    rw.support_left = sampled_support_left(rw.g, lo, hi);
    if (rw.support_left) {
        for (double k : rw.kinks)
            if (std::abs(k - *rw.support_left) <= 1e-12 * std::max(1.0, std::abs(k)))
                rw.support_left = k;
    }
    rw.check_nonnegative(lo, hi);
    return rw;
}

}  // namespace stopside
