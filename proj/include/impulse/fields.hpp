#pragma once

#include <compare>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "impulse/expr.hpp"

namespace impulse {

/// [h, k](x) = Dk(x) h(x) - Dh(x) k(x), built symbolically.
VectorField lie_bracket(const VectorField& h, const VectorField& k);

/// Binary tree whose leaves index into a tuple of vector fields and whose
/// internal nodes are bracket applications.
class FormalBracket {
public:
  static FormalBracket leaf(std::size_t index);
  static FormalBracket bracket(const FormalBracket& left, const FormalBracket& right);

  bool is_leaf() const { return !node_->left; }
  std::size_t leaf_index() const { return node_->index; }
  FormalBracket left() const { return FormalBracket(node_->left); }
  FormalBracket right() const { return FormalBracket(node_->right); }

  /// Number of leaves.
  std::size_t degree() const { return node_->degree; }
  std::size_t max_leaf_index() const;

  /// Nested form such as `[[g1,g2],g1]`; leaves print as `<prefix><index+1>`.
  std::string to_string(std::string_view prefix = "g") const;
  static FormalBracket from_string(std::string_view text, std::string_view prefix = "g");

  /// Canonical total order: higher degree first, then left subtree, then
  /// right subtree; leaves by index.
  friend std::strong_ordering operator<=>(const FormalBracket& a, const FormalBracket& b);
  friend bool operator==(const FormalBracket& a, const FormalBracket& b) { return (a <=> b) == 0; }

private:
  struct Node {
    std::size_t index = 0;
    std::size_t degree = 1;
    std::shared_ptr<const Node> left;
    std::shared_ptr<const Node> right;
  };
  explicit FormalBracket(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// B(h): the symbolic vector field obtained by substituting the tuple.
VectorField instantiate(const FormalBracket& b, const std::vector<VectorField>& fields);

/// Value of B(h) at x.
Eigen::VectorXd eval_formal(const FormalBracket& b, const std::vector<VectorField>& fields, const Eigen::VectorXd& x);

enum class FamilyTag { B0, B1 };

/// Iterated brackets of g_1..g_{m1}. Each entry's leaves index directly into
/// (g_1, ..., g_{m1}), which is the leaf assignment of the bracket pair.
struct BracketFamily {
  FamilyTag tag = FamilyTag::B0;
  std::size_t m1 = 0;
  std::vector<FormalBracket> entries;
};

/// All brackets of degree <= max_degree over m1 symbols, up to antisymmetry,
/// with syntactically zero [A, A] removed.
BracketFamily enumerate_family(std::size_t m1, std::size_t max_degree, FamilyTag tag);

}  // namespace impulse
