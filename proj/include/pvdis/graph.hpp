#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "pvdis/types.hpp"

namespace pvdis::ad {

class Node;
using NodePtr = std::shared_ptr<Node>;

/// One value in a reverse-mode computation graph. Graphs are built by the
/// free functions below (define-by-run), differentiated once by backward(),
/// and then discarded; values are immutable after construction.
class Node {
public:
    Node(Matrix v, const char* op_tag, std::vector<NodePtr> parent_nodes)
        : value(std::move(v)),
          grad(Matrix::Zero(value.rows(), value.cols())),
          op(op_tag),
          parents(std::move(parent_nodes)) {}

    Matrix value;
    Matrix grad; // same shape as value, accumulated by backward()
    const char* op;
    std::vector<NodePtr> parents;

    // Scatters this->grad into the parents' grads. Captures raw Node
    // pointers only; lifetime is guaranteed by the parents vector.
    std::function<void()> backprop;
};

/// Wraps a matrix as a graph leaf (parameter or constant input).
NodePtr leaf(Matrix v);
NodePtr leaf(const Vector& v);
NodePtr scalar(double v);

NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr relu(const NodePtr& x);
NodePtr softmax_rows(const NodePtr& x);

/// Non-overlapping windowed max over a column-vector series; stride = k,
/// final partial window kept. Gradient routes to the first argmax of each
/// window.
NodePtr maxpool1d(const NodePtr& x, Index k);

NodePtr concat_cols(const std::vector<NodePtr>& parts);
NodePtr concat_rows(const std::vector<NodePtr>& parts);
NodePtr transpose(const NodePtr& x);

/// Reinterprets the entries in row-major order under a new shape.
NodePtr reshape(const NodePtr& x, Index rows, Index cols);

/// Product of a 1x1 node and a matrix node, differentiable in both.
NodePtr scale(const NodePtr& s, const NodePtr& x);
NodePtr scale_by(const NodePtr& x, double c);

/// Mean squared error over all entries, as a 1x1 node.
NodePtr mse(const NodePtr& pred, const NodePtr& target);
NodePtr sum(const NodePtr& x);

/// Reverse-mode sweep from a scalar loss: zeroes every reachable grad,
/// seeds d(loss)/d(loss) = 1, and visits each node exactly once in reverse
/// topological order. Unreached leaves keep their zero grad.
void backward(const NodePtr& loss);

} // namespace pvdis::ad
