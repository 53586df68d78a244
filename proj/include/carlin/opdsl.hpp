#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "carlin/discrete_op.hpp"
#include "carlin/grid.hpp"

namespace carlin {

struct DslNode;
using DslPtr = std::shared_ptr<const DslNode>;

/// AST of the textual operator language. Dims are 1-based as written
/// ("x1", "w2"); compilation shifts to 0-based.
struct DslNode {
  enum class Kind {
    Number,   // literal constant
    Symbol,   // named constant resolved at compile time
    Coord,    // coordinate multiplier xK / wK
    Deriv,    // d/dxK, dP/dwK^P
    CumInt,   // cumint(wK)
    FullInt,  // int(wK)
    Delta,    // delta(wK=xJ), diagonal restriction
    Product,  // factors composed right to left
    Sum,      // terms with +1/-1 signs
    Negate,
  };

  Kind kind = Kind::Number;
  double number = 0.0;
  std::string name;
  CopyTag copy = CopyTag::X;
  int dim = 1;
  int order = 1;
  int xdim = 1;  // Delta target
  std::vector<DslPtr> children;
  std::vector<int> signs;  // Sum only
};

struct ParseError : std::runtime_error {
  std::size_t position;
  std::string expected;
  std::string found;

  ParseError(std::size_t pos, std::string expected_, std::string found_)
      : std::runtime_error("parse error at offset " + std::to_string(pos) +
                           ": expected " + expected_ + ", found " + found_),
        position(pos),
        expected(std::move(expected_)),
        found(std::move(found_)) {}
};

/// Grammar: expr := term (('+'|'-') term)*; term := factor ('*' factor)*;
/// factor := number | identifier | coord | derivative | cumint(wK) | int(wK)
///         | delta(wK=xJ) | '(' expr ')' | '-' factor.
/// Throws ParseError; never crashes on malformed input.
DslPtr parse_operator(std::string_view src);

/// Canonical text form; parse_operator(pretty_print(e)) is structurally
/// identical to e.
std::string pretty_print(const DslNode& e);

bool ast_equal(const DslNode& a, const DslNode& b);

struct CompileOptions {
  std::map<std::string, double> bindings;  // symbol values
  DerivScheme scheme = DerivScheme::Central2;
};

/// Lowers an AST to an operator tree over the given grid. Unbound symbols and
/// out-of-range dims are reported as std::invalid_argument.
OpPtr compile_operator(const DslNode& e, const GridSpec& grid,
                       const CompileOptions& opts);

/// compile_operator plus the w-discipline checks for system entries: a linear
/// (F1) entry must not touch the w copy, a quadratic (F2) entry must consume
/// every w dim. Violations name the dangling dims.
OpPtr compile_linear_entry(const DslNode& e, const GridSpec& grid,
                           const CompileOptions& opts);
OpPtr compile_quadratic_entry(const DslNode& e, const GridSpec& grid,
                              const CompileOptions& opts);

}  // namespace carlin
