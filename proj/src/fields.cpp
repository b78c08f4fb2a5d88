#include "impulse/fields.hpp"

#include <algorithm>
#include <map>

#include "impulse/error.hpp"

namespace impulse {

VectorField lie_bracket(const VectorField& h, const VectorField& k) {
  if (h.dimension() != k.dimension())
    throw DimensionMismatch("fields", "lie_bracket of fields with dimensions " + std::to_string(h.dimension()) +
                                          " and " + std::to_string(k.dimension()));
  const std::size_t n = h.dimension();
  const Jacobian dh(h);
  const Jacobian dk(k);
  std::vector<Expression> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Expression acc = Expression::constant(0.0);
    for (std::size_t j = 0; j < n; ++j) {
      acc = acc + dk(i, j) * h[j];
      acc = acc - dh(i, j) * k[j];
    }
    out.push_back(acc);
  }
  return VectorField(n, std::move(out));
}

FormalBracket FormalBracket::leaf(std::size_t index) {
  auto n = std::make_shared<Node>();
  n->index = index;
  return FormalBracket(std::move(n));
}

FormalBracket FormalBracket::bracket(const FormalBracket& left, const FormalBracket& right) {
  auto n = std::make_shared<Node>();
  n->degree = left.degree() + right.degree();
  n->left = left.node_;
  n->right = right.node_;
  return FormalBracket(std::move(n));
}

std::size_t FormalBracket::max_leaf_index() const {
  if (is_leaf()) return leaf_index();
  return std::max(left().max_leaf_index(), right().max_leaf_index());
}

std::string FormalBracket::to_string(std::string_view prefix) const {
  if (is_leaf()) return std::string(prefix) + std::to_string(leaf_index() + 1);
  return "[" + left().to_string(prefix) + "," + right().to_string(prefix) + "]";
}

namespace {

FormalBracket parse_bracket(std::string_view text, std::size_t& pos, std::string_view prefix) {
  auto skip = [&] {
    while (pos < text.size() && text[pos] == ' ') ++pos;
  };
  skip();
  if (pos < text.size() && text[pos] == '[') {
    ++pos;
    FormalBracket l = parse_bracket(text, pos, prefix);
    skip();
    if (pos >= text.size() || text[pos] != ',') throw ParseError(pos, "expected ',' in bracket");
    ++pos;
    FormalBracket r = parse_bracket(text, pos, prefix);
    skip();
    if (pos >= text.size() || text[pos] != ']') throw ParseError(pos, "expected ']' in bracket");
    ++pos;
    return FormalBracket::bracket(l, r);
  }
  if (text.substr(pos, prefix.size()) != prefix) throw ParseError(pos, "expected bracket leaf");
  pos += prefix.size();
  std::size_t value = 0;
  const std::size_t start = pos;
  while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') value = value * 10 + static_cast<std::size_t>(text[pos++] - '0');
  if (start == pos || value == 0) throw ParseError(start, "expected positive leaf index");
  return FormalBracket::leaf(value - 1);
}

}  // namespace

FormalBracket FormalBracket::from_string(std::string_view text, std::string_view prefix) {
  std::size_t pos = 0;
  FormalBracket b = parse_bracket(text, pos, prefix);
  if (pos != text.size()) throw ParseError(pos, "trailing characters after bracket");
  return b;
}

std::strong_ordering operator<=>(const FormalBracket& a, const FormalBracket& b) {
  if (a.degree() != b.degree()) return b.degree() <=> a.degree();
  if (a.is_leaf()) return a.leaf_index() <=> b.leaf_index();
  if (auto c = a.left() <=> b.left(); c != 0) return c;
  return a.right() <=> b.right();
}

VectorField instantiate(const FormalBracket& b, const std::vector<VectorField>& fields) {
  if (b.is_leaf()) {
    if (b.leaf_index() >= fields.size())
      throw DimensionMismatch("fields", "bracket leaf " + std::to_string(b.leaf_index() + 1) + " outside tuple of " +
                                            std::to_string(fields.size()));
    return fields[b.leaf_index()];
  }
  return lie_bracket(instantiate(b.left(), fields), instantiate(b.right(), fields));
}

Eigen::VectorXd eval_formal(const FormalBracket& b, const std::vector<VectorField>& fields, const Eigen::VectorXd& x) {
  return instantiate(b, fields).evaluate(x);
}

BracketFamily enumerate_family(std::size_t m1, std::size_t max_degree, FamilyTag tag) {
  BracketFamily family{tag, m1, {}};
  if (m1 == 0 || max_degree == 0) return family;

  // by_degree[d] holds canonical brackets of degree d in canonical order.
  std::vector<std::vector<FormalBracket>> by_degree(max_degree + 1);
  for (std::size_t i = 0; i < m1; ++i) by_degree[1].push_back(FormalBracket::leaf(i));
  for (std::size_t d = 2; d <= max_degree; ++d) {
    for (std::size_t dl = d - 1; dl >= (d + 1) / 2; --dl) {
      const std::size_t dr = d - dl;
      for (const auto& l : by_degree[dl])
        for (const auto& r : by_degree[dr])
          if (l < r) by_degree[d].push_back(FormalBracket::bracket(l, r));
    }
    std::sort(by_degree[d].begin(), by_degree[d].end());
  }
  for (std::size_t d = 1; d <= max_degree; ++d)
    family.entries.insert(family.entries.end(), by_degree[d].begin(), by_degree[d].end());
  return family;
}

}  // namespace impulse
