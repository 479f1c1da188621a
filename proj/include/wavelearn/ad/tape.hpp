#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "wavelearn/ad/tensor.hpp"

namespace wavelearn::ad {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid as long as the
// tape lives.
class Var {
public:
    Var() = default;

    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

    const Tensor& value() const;
    const Shape& shape() const { return value().shape; }
    std::size_t size() const { return value().size(); }
    double item() const;

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

// Propagates the adjoint of a node into its parents.
using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

// Ordered record of primitive operations. Nodes are appended in evaluation
// order, so reverse index order is a valid topological order for the
// backward sweep. Single-threaded; use one tape per worker.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var leaf(Tensor value);

    // Records an operation result. The node requires a gradient when any
    // parent does; otherwise `fn` is dropped.
    Var record(Tensor value, const std::vector<Var>& parents, BackwardFn fn);

    // Reverse sweep from a one-element root. Gradients from a previous call
    // are cleared first. Throws DimensionError on a non-scalar root.
    void backward(Var root);

    const Tensor& value(Var v) const { return nodes_[v.id()].value; }
    bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

    // Gradient of a node after backward(); zeros when it received none.
    Tensor grad(Var v) const;

    // Zero-initialized adjoint buffer for use inside backward functions.
    Tensor& grad_buffer(Var v);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool has_grad = false;
        BackwardFn backward;
    };

    Var push(Node node);

    std::vector<Node> nodes_;
};

}  // namespace wavelearn::ad
