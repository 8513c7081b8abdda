#pragma once

#include "iipmixer/matrix.hpp"
#include "iipmixer/rng.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace iipm {

//! Operation record for reverse-mode differentiation.
//!
//! A Tape captures one forward pass of a fixed computation graph as a flat
//! list of primitive ops (matmul, add, GELU, transpose, reshape, dropout
//! mask, ...). backward() replays the list in exact reverse order and
//! accumulates one gradient per node; parameters registered through param()
//! end up with exactly one accumulated gradient each, no matter how many
//! times they were used.
//!
//! One tape serves one forward/backward on one thread. Distinct tapes (and
//! the models recorded on them) are independent, so separate instances may
//! run concurrently.
class Tape {
public:
    using NodeId = std::int32_t;

    //! Leaf whose gradient is tracked (inputs that need chaining).
    NodeId input(Matrix value);
    //! Leaf that never receives a gradient (targets, fixed masks, ...).
    NodeId constant(Matrix value);
    //! Parameter leaf bound to external storage. One node per distinct
    //! pointer; repeated calls return the same id.
    NodeId param(const Matrix* storage);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId hadamard(NodeId a, NodeId b);
    NodeId scale(NodeId a, double factor);
    NodeId transpose(NodeId a);
    NodeId reshape(NodeId a, std::size_t rows, std::size_t cols);
    NodeId gelu(NodeId a);
    //! Broadcasts a 1xC row over the rows of a; the row's gradient is the
    //! column sum of the incoming gradient.
    NodeId add_row_vector(NodeId a, NodeId row);
    //! Inverted-dropout mask drawn from rng; rate 0 is an exact no-op.
    NodeId dropout(NodeId a, double rate, Rng& rng);

    //! Seeds d(loss)/d(loss) = 1 and walks the tape backwards. loss must be
    //! a 1x1 node on a non-empty tape.
    void backward(NodeId loss);

    const Matrix& value(NodeId id) const;
    //! Gradient accumulated for a node by the last backward(). Zero matrix
    //! if the node was not reached.
    const Matrix& grad(NodeId id) const;
    //! Gradient for a parameter. A parameter the forward pass never touched
    //! (e.g. the unused head of a single-head block) gets a zero gradient of
    //! its own shape.
    Matrix grad_for(const Matrix* storage) const;

    bool backward_done() const { return backward_done_; }
    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : std::uint8_t {
        Input, Constant, Param, MatMul, Add, Sub, Hadamard, Scale,
        Transpose, Reshape, Gelu, AddRowVector, Dropout,
    };

    struct Node {
        Op op;
        NodeId a = -1;
        NodeId b = -1;
        bool needs_grad = false;
        double factor = 0.0;   // Scale
        Matrix mask;           // Dropout
        Matrix value;
        Matrix grad;
    };

    NodeId push(Node node);
    NodeId check(NodeId id) const;
    void accumulate(NodeId target, const Matrix& g);

    std::vector<Node> nodes_;
    std::unordered_map<const Matrix*, NodeId> param_ids_;
    bool backward_done_ = false;
};

} // namespace iipm
