#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cldice/grid.hpp"
#include "cldice/metrics.hpp"

namespace cldice {

// Reverse-mode tape covering exactly the operations the losses and the small
// convolutional predictor need. Nodes reference earlier nodes only; values
// are recomputable, so leaves can be reassigned and the same graph replayed.
// Pooling backward routes the whole adjoint to the argmax cell (first window
// index on ties); relu takes subgradient 0 at 0. Fields and rank-0 scalars
// share one value type; broadcasting exists only between a scalar and a field.
class Tape {
 public:
  enum class Op : std::uint8_t {
    Leaf, Const, Add, Sub, Mul, Div, Neg, Relu, Sigmoid, Sum,
    MaxPool1D, MaxPoolWin, Conv2D,
  };

  int leaf(const ScalarField& f);
  int leaf(const Shape& shape, std::vector<double> values);
  int scalar_leaf(double v);
  int constant(const Shape& shape, std::vector<double> values);
  int scalar_const(double v);

  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int div(int a, int b);
  int neg(int a);
  int relu(int a);
  int sigmoid(int a);
  int sum(int a);
  int max_pool_1d(int a, int axis);
  int min_pool_1d(int a, int axis);  // composed as -maxpool(-x)
  int max_pool_window(int a);        // full 3x3(x3) clipped window
  int conv2d(int input, int kernel); // single channel, odd kernel, zero same-pad

  void set_leaf(int node, const std::vector<double>& values);
  void set_leaf_scalar(int node, double v);

  // Recompute every node in order; returns the route signature (hash of all
  // pooling argmax choices and relu sign bits) used for tie detection.
  std::uint64_t forward();

  // Reverse sweep from a scalar-valued node; adjoints retrievable afterwards.
  void backward(int loss_node);

  double value(int node) const;                       // scalar nodes
  const std::vector<double>& values(int node) const;  // any node
  const std::vector<double>& adjoint(int node) const;
  const Shape& shape(int node) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Op op;
    int a = -1, b = -1;
    int axis = -1;
    Shape shape;
    std::vector<double> val;
    std::vector<std::int32_t> route;  // pooling argmax, flat input indices
  };

  int push(Node n);
  void check_index(int node) const;

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> adjoints_;
};

// Differentiable mirrors of the morphology/metrics operators; each returns
// the node id of its result.
int build_soft_erode(Tape& t, int x);
int build_soft_dilate(Tape& t, int x);
int build_soft_open(Tape& t, int x);
int build_soft_skeleton(Tape& t, int x, int k);
int build_soft_dice(Tape& t, int p, int l, double epsilon);
int build_soft_cl_dice(Tape& t, int p, int l, const LossParams& params);
int build_combined_loss(Tape& t, int p, int l, const LossParams& params);

struct GradCheckReport {
  struct Offender {
    std::size_t coord = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
  };
  double max_rel_err = 0.0;
  int checked = 0;
  int excluded_ties = 0;   // coordinates whose pooling/relu route moved under +-h
  int skipped_small = 0;   // |analytic| + |numeric| below threshold
  std::vector<Offender> worst;
  bool passed(double tol) const { return max_rel_err < tol; }
};

// Builder receives the tape and the input leaf id and returns the scalar loss
// node. Central differences per coordinate (all of them, or a seeded random
// subset of max_coords when set); tie-adjacent coordinates are excluded and
// counted via route-signature comparison.
GradCheckReport grad_check(const std::function<int(Tape&, int)>& build_loss,
                           const ScalarField& input, double h, double tol,
                           int max_coords = -1, std::uint64_t seed = 0x5eed);

}  // namespace cldice
