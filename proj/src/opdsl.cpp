#include "carlin/opdsl.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

namespace carlin {

namespace {

struct Token {
  enum class Kind {
    Number,
    Ident,
    Coord,  // x/w + dim
    Deriv,  // copy, dim, order
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    Equals,
    End,
  };
  Kind kind = Kind::End;
  std::size_t pos = 0;
  double number = 0.0;
  std::string text;
  CopyTag copy = CopyTag::X;
  int dim = 1;
  int order = 1;
};

const char* token_name(Token::Kind k) {
  switch (k) {
    case Token::Kind::Number: return "a number";
    case Token::Kind::Ident: return "an identifier";
    case Token::Kind::Coord: return "a coordinate";
    case Token::Kind::Deriv: return "a derivative";
    case Token::Kind::Plus: return "'+'";
    case Token::Kind::Minus: return "'-'";
    case Token::Kind::Star: return "'*'";
    case Token::Kind::LParen: return "'('";
    case Token::Kind::RParen: return "')'";
    case Token::Kind::Equals: return "'='";
    case Token::Kind::End: return "end of input";
  }
  return "?";
}

std::string describe(const Token& t) {
  if (t.kind == Token::Kind::End) return "end of input";
  return "'" + t.text + "'";
}

struct Lexer {
  std::string_view src;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos])))
      ++pos;
  }

  bool match_uint(std::size_t& p, int& out) const {
    std::size_t start = p;
    long v = 0;
    while (p < src.size() && std::isdigit(static_cast<unsigned char>(src[p]))) {
      v = v * 10 + (src[p] - '0');
      if (v > 1u << 20) return false;
      ++p;
    }
    if (p == start) return false;
    out = static_cast<int>(v);
    return true;
  }

  /// d[P]/d(x|w)K[^P], no internal whitespace.
  bool try_deriv(Token& t) {
    std::size_t p = pos;
    if (p >= src.size() || src[p] != 'd') return false;
    ++p;
    int lead = 0;
    const bool has_lead = match_uint(p, lead);
    if (p + 1 >= src.size() || src[p] != '/' || src[p + 1] != 'd')
      return false;
    p += 2;
    if (p >= src.size() || (src[p] != 'x' && src[p] != 'w')) return false;
    const CopyTag copy = src[p] == 'x' ? CopyTag::X : CopyTag::W;
    ++p;
    int dim = 0;
    if (!match_uint(p, dim)) return false;
    int trail = 1;
    bool has_trail = false;
    if (p < src.size() && src[p] == '^') {
      std::size_t q = p + 1;
      if (!match_uint(q, trail)) return false;
      p = q;
      has_trail = true;
    }
    if (has_lead != has_trail || (has_lead && lead != trail)) return false;
    t.kind = Token::Kind::Deriv;
    t.copy = copy;
    t.dim = dim;
    t.order = has_lead ? lead : 1;
    t.text = std::string(src.substr(pos, p - pos));
    pos = p;
    return true;
  }

  Token next() {
    skip_ws();
    Token t;
    t.pos = pos;
    if (pos >= src.size()) return t;
    const char c = src[pos];
    switch (c) {
      case '+': t.kind = Token::Kind::Plus; break;
      case '-': t.kind = Token::Kind::Minus; break;
      case '*': t.kind = Token::Kind::Star; break;
      case '(': t.kind = Token::Kind::LParen; break;
      case ')': t.kind = Token::Kind::RParen; break;
      case '=': t.kind = Token::Kind::Equals; break;
      default: break;
    }
    if (t.kind != Token::Kind::End) {
      t.text = std::string(1, c);
      ++pos;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      const char* begin = src.data() + pos;
      const char* end = src.data() + src.size();
      double value = 0.0;
      auto [next_ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc{})
        throw ParseError(pos, "a number", std::string(1, c));
      t.kind = Token::Kind::Number;
      t.number = value;
      t.text = std::string(begin, next_ptr);
      pos += static_cast<std::size_t>(next_ptr - begin);
      return t;
    }
    if (c == 'd' && try_deriv(t)) return t;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t p = pos;
      while (p < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[p])) ||
              src[p] == '_'))
        ++p;
      std::string word(src.substr(pos, p - pos));
      // xK / wK with all-digit tail is a coordinate, not an identifier.
      if ((word[0] == 'x' || word[0] == 'w') && word.size() > 1) {
        bool digits = true;
        for (std::size_t k = 1; k < word.size(); ++k)
          if (!std::isdigit(static_cast<unsigned char>(word[k]))) {
            digits = false;
            break;
          }
        if (digits) {
          t.kind = Token::Kind::Coord;
          t.copy = word[0] == 'x' ? CopyTag::X : CopyTag::W;
          t.dim = std::atoi(word.c_str() + 1);
          t.text = std::move(word);
          pos = p;
          return t;
        }
      }
      t.kind = Token::Kind::Ident;
      t.text = std::move(word);
      pos = p;
      return t;
    }
    throw ParseError(pos, "a token", std::string(1, c));
  }
};

struct Parser {
  Lexer lex;
  Token cur;

  explicit Parser(std::string_view src) : lex{src} { cur = lex.next(); }

  void advance() { cur = lex.next(); }

  Token expect(Token::Kind kind) {
    if (cur.kind != kind)
      throw ParseError(cur.pos, token_name(kind), describe(cur));
    Token t = cur;
    advance();
    return t;
  }

  Token expect_coord(CopyTag copy) {
    if (cur.kind != Token::Kind::Coord || cur.copy != copy)
      throw ParseError(cur.pos,
                       copy == CopyTag::W ? "a w coordinate" : "an x coordinate",
                       describe(cur));
    Token t = cur;
    advance();
    return t;
  }

  DslPtr parse_expr() {
    std::vector<DslPtr> terms;
    std::vector<int> signs;
    terms.push_back(parse_term());
    signs.push_back(1);
    while (cur.kind == Token::Kind::Plus || cur.kind == Token::Kind::Minus) {
      signs.push_back(cur.kind == Token::Kind::Plus ? 1 : -1);
      advance();
      terms.push_back(parse_term());
    }
    if (terms.size() == 1) return terms[0];
    auto node = std::make_shared<DslNode>();
    node->kind = DslNode::Kind::Sum;
    node->children = std::move(terms);
    node->signs = std::move(signs);
    return node;
  }

  DslPtr parse_term() {
    std::vector<DslPtr> factors;
    factors.push_back(parse_factor());
    while (cur.kind == Token::Kind::Star) {
      advance();
      factors.push_back(parse_factor());
    }
    if (factors.size() == 1) return factors[0];
    auto node = std::make_shared<DslNode>();
    node->kind = DslNode::Kind::Product;
    node->children = std::move(factors);
    return node;
  }

  DslPtr parse_factor() {
    auto node = std::make_shared<DslNode>();
    switch (cur.kind) {
      case Token::Kind::Number:
        node->kind = DslNode::Kind::Number;
        node->number = cur.number;
        advance();
        return node;
      case Token::Kind::Minus: {
        advance();
        node->kind = DslNode::Kind::Negate;
        node->children.push_back(parse_factor());
        return node;
      }
      case Token::Kind::LParen: {
        advance();
        DslPtr inner = parse_expr();
        expect(Token::Kind::RParen);
        return inner;
      }
      case Token::Kind::Coord:
        node->kind = DslNode::Kind::Coord;
        node->copy = cur.copy;
        node->dim = cur.dim;
        advance();
        return node;
      case Token::Kind::Deriv:
        node->kind = DslNode::Kind::Deriv;
        node->copy = cur.copy;
        node->dim = cur.dim;
        node->order = cur.order;
        advance();
        return node;
      case Token::Kind::Ident: {
        const std::string name = cur.text;
        if (name == "cumint" || name == "int") {
          advance();
          expect(Token::Kind::LParen);
          const Token w = expect_coord(CopyTag::W);
          expect(Token::Kind::RParen);
          node->kind = name == "cumint" ? DslNode::Kind::CumInt
                                        : DslNode::Kind::FullInt;
          node->dim = w.dim;
          return node;
        }
        if (name == "delta") {
          advance();
          expect(Token::Kind::LParen);
          const Token w = expect_coord(CopyTag::W);
          expect(Token::Kind::Equals);
          const Token x = expect_coord(CopyTag::X);
          expect(Token::Kind::RParen);
          node->kind = DslNode::Kind::Delta;
          node->dim = w.dim;
          node->xdim = x.dim;
          return node;
        }
        node->kind = DslNode::Kind::Symbol;
        node->name = name;
        advance();
        return node;
      }
      default:
        throw ParseError(cur.pos, "a factor", describe(cur));
    }
  }
};

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void print_node(const DslNode& e, std::string& out) {
  switch (e.kind) {
    case DslNode::Kind::Number:
      out += format_number(e.number);
      return;
    case DslNode::Kind::Symbol:
      out += e.name;
      return;
    case DslNode::Kind::Coord:
      out += e.copy == CopyTag::X ? 'x' : 'w';
      out += std::to_string(e.dim);
      return;
    case DslNode::Kind::Deriv: {
      const char axis = e.copy == CopyTag::X ? 'x' : 'w';
      if (e.order == 1) {
        out += "d/d";
        out += axis;
        out += std::to_string(e.dim);
      } else {
        out += 'd';
        out += std::to_string(e.order);
        out += "/d";
        out += axis;
        out += std::to_string(e.dim);
        out += '^';
        out += std::to_string(e.order);
      }
      return;
    }
    case DslNode::Kind::CumInt:
      out += "cumint(w" + std::to_string(e.dim) + ")";
      return;
    case DslNode::Kind::FullInt:
      out += "int(w" + std::to_string(e.dim) + ")";
      return;
    case DslNode::Kind::Delta:
      out += "delta(w" + std::to_string(e.dim) + "=x" +
             std::to_string(e.xdim) + ")";
      return;
    case DslNode::Kind::Product:
      for (std::size_t k = 0; k < e.children.size(); ++k) {
        if (k != 0) out += " * ";
        const DslNode& c = *e.children[k];
        // Nested sums and products came from explicit parentheses; reprint
        // them parenthesized or the reparse would flatten them.
        if (c.kind == DslNode::Kind::Sum || c.kind == DslNode::Kind::Product) {
          out += '(';
          print_node(c, out);
          out += ')';
        } else {
          print_node(c, out);
        }
      }
      return;
    case DslNode::Kind::Sum:
      for (std::size_t k = 0; k < e.children.size(); ++k) {
        if (k != 0) out += e.signs[k] > 0 ? " + " : " - ";
        const DslNode& c = *e.children[k];
        if (c.kind == DslNode::Kind::Sum ||
            (k != 0 && c.kind == DslNode::Kind::Negate)) {
          out += '(';
          print_node(c, out);
          out += ')';
        } else {
          print_node(c, out);
        }
      }
      return;
    case DslNode::Kind::Negate: {
      out += '-';
      const DslNode& c = *e.children[0];
      if (c.kind == DslNode::Kind::Sum || c.kind == DslNode::Kind::Product) {
        out += '(';
        print_node(c, out);
        out += ')';
      } else {
        print_node(c, out);
      }
      return;
    }
  }
}

}  // namespace

DslPtr parse_operator(std::string_view src) {
  Parser parser(src);
  DslPtr e = parser.parse_expr();
  if (parser.cur.kind != Token::Kind::End)
    throw ParseError(parser.cur.pos, "end of input", describe(parser.cur));
  return e;
}

std::string pretty_print(const DslNode& e) {
  std::string out;
  print_node(e, out);
  return out;
}

bool ast_equal(const DslNode& a, const DslNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case DslNode::Kind::Number:
      return a.number == b.number;
    case DslNode::Kind::Symbol:
      return a.name == b.name;
    case DslNode::Kind::Coord:
      return a.copy == b.copy && a.dim == b.dim;
    case DslNode::Kind::Deriv:
      return a.copy == b.copy && a.dim == b.dim && a.order == b.order;
    case DslNode::Kind::CumInt:
    case DslNode::Kind::FullInt:
      return a.dim == b.dim;
    case DslNode::Kind::Delta:
      return a.dim == b.dim && a.xdim == b.xdim;
    case DslNode::Kind::Sum:
      if (a.signs != b.signs) return false;
      [[fallthrough]];
    case DslNode::Kind::Product:
    case DslNode::Kind::Negate:
      if (a.children.size() != b.children.size()) return false;
      for (std::size_t k = 0; k < a.children.size(); ++k)
        if (!ast_equal(*a.children[k], *b.children[k])) return false;
      return true;
  }
  return false;
}

namespace {

[[noreturn]] void compile_error(const std::string& what) {
  throw std::invalid_argument("opdsl: " + what);
}

int lower_dim(int surface_dim, const GridSpec& grid) {
  if (surface_dim < 1 || surface_dim > grid.dims)
    compile_error("dim " + std::to_string(surface_dim) +
                  " out of range for a " + std::to_string(grid.dims) +
                  "-dim grid");
  return surface_dim - 1;
}

OpPtr compile_node(const DslNode& e, const GridSpec& grid,
                   const CompileOptions& opts) {
  switch (e.kind) {
    case DslNode::Kind::Number:
      return op_scale(e.number);
    case DslNode::Kind::Symbol: {
      auto it = opts.bindings.find(e.name);
      if (it == opts.bindings.end())
        compile_error("unbound symbol '" + e.name + "'");
      return op_scale(it->second);
    }
    case DslNode::Kind::Coord:
      return op_coord(e.copy, lower_dim(e.dim, grid));
    case DslNode::Kind::Deriv:
      return op_deriv(grid, e.copy, lower_dim(e.dim, grid), e.order,
                      opts.scheme);
    case DslNode::Kind::CumInt:
      return op_cumint(lower_dim(e.dim, grid));
    case DslNode::Kind::FullInt:
      return op_fullint(lower_dim(e.dim, grid));
    case DslNode::Kind::Delta:
      return op_restrict(lower_dim(e.dim, grid), lower_dim(e.xdim, grid));
    case DslNode::Kind::Product: {
      std::vector<OpPtr> ops;
      ops.reserve(e.children.size());
      for (const DslPtr& c : e.children)
        ops.push_back(compile_node(*c, grid, opts));
      return op_compose(std::move(ops));
    }
    case DslNode::Kind::Sum: {
      std::vector<OpPtr> ops;
      std::vector<double> weights;
      ops.reserve(e.children.size());
      for (std::size_t k = 0; k < e.children.size(); ++k) {
        ops.push_back(compile_node(*e.children[k], grid, opts));
        weights.push_back(static_cast<double>(e.signs[k]));
      }
      return op_sum(std::move(weights), std::move(ops));
    }
    case DslNode::Kind::Negate:
      return op_compose(
          {op_scale(-1.0), compile_node(*e.children[0], grid, opts)});
  }
  compile_error("unknown node kind");
}

std::string list_dims(unsigned mask, int dims) {
  std::string out;
  for (int d = 0; d < dims; ++d)
    if (mask & (1u << d)) {
      if (!out.empty()) out += ", ";
      out += "w" + std::to_string(d + 1);
    }
  return out;
}

}  // namespace

OpPtr compile_operator(const DslNode& e, const GridSpec& grid,
                       const CompileOptions& opts) {
  return compile_node(e, grid, opts);
}

OpPtr compile_linear_entry(const DslNode& e, const GridSpec& grid,
                           const CompileOptions& opts) {
  OpPtr op = compile_node(e, grid, opts);
  op_trace_wmask(*op, 0u, grid.dims);  // throws on any w reference
  return op;
}

OpPtr compile_quadratic_entry(const DslNode& e, const GridSpec& grid,
                              const CompileOptions& opts) {
  OpPtr op = compile_node(e, grid, opts);
  const unsigned full = (1u << grid.dims) - 1u;
  const unsigned left = op_trace_wmask(*op, full, grid.dims);
  if (left != 0u)
    compile_error("quadratic entry leaves w dims unconsumed: " +
                  list_dims(left, grid.dims));
  return op;
}

}  // namespace carlin
