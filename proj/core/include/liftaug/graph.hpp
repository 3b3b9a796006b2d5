#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "liftaug/tensor.hpp"

namespace liftaug {

class Tape;

/// A named trainable tensor with an accumulated gradient.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;

    void zero_grad() {
        for (double& g : grad.raw()) g = 0.0;
    }
};

/// Owns parameters by name in insertion order.
class ParamStore {
  public:
    Param& add(const std::string& name, Tensor init, bool trainable = true);
    Param* find(const std::string& name);
    const Param* find(const std::string& name) const;
    Param& at(const std::string& name);

    std::vector<Param*> all();
    std::vector<const Param*> all() const;
    std::vector<Param*> trainable();

    size_t size() const { return params_.size(); }
    void zero_grad();
    long total_elements() const;
    /// Order-sensitive hash of all parameter values (buffers included).
    uint64_t value_hash() const;

  private:
    std::vector<std::unique_ptr<Param>> params_;
};

/// Handle to a node on a Tape.
class Value {
  public:
    Value() = default;
    Value(Tape* tape, int index) : tape_(tape), index_(index) {}

    bool defined() const { return tape_ != nullptr; }
    const Tensor& val() const;
    /// Gradient accumulated by backward(); zeros if the node never
    /// received one.
    Tensor grad() const;
    int index() const { return index_; }
    Tape* tape() const { return tape_; }

  private:
    Tape* tape_ = nullptr;
    int index_ = -1;
};

/// Reverse-mode tape. Nodes are recorded in evaluation order; backward()
/// walks them once in reverse. A tape is single-use: after backward()
/// it must be reset() before recording again.
class Tape {
  public:
    using BackFn = std::function<void(Tape&, const Tensor&)>;

    struct Node {
        Tensor value;
        Tensor grad;  // allocated on first accumulation
        bool requires_grad = false;
        bool has_grad = false;
        BackFn backward;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Non-differentiable value.
    Value constant(Tensor v);
    /// Differentiable input; its gradient stays on the node.
    Value input(Tensor v);
    /// Parameter leaf. Gradients accumulate into p.grad unless the
    /// parameter is non-trainable or attach_grad is false, in which case
    /// the value participates as a constant.
    Value leaf(Param& p, bool attach_grad = true);
    /// Record an op result with its backward closure.
    Value record(Tensor v, bool requires_grad, BackFn backward);

    const Tensor& value(int i) const { return nodes_[static_cast<size_t>(i)].value; }
    bool requires_grad(int i) const { return nodes_[static_cast<size_t>(i)].requires_grad; }
    const Node& node(int i) const { return nodes_[static_cast<size_t>(i)]; }

    /// Add g into node i's gradient.
    void accumulate(int i, const Tensor& g);

    /// Backpropagate from a scalar node. Throws ContractError on a
    /// non-scalar loss or a second call without reset().
    void backward(const Value& loss);

    void reset();
    size_t size() const { return nodes_.size(); }
    bool backward_done() const { return backward_done_; }

  private:
    // Deque keeps references returned by value()/val() stable while new
    // nodes are appended mid-expression.
    std::deque<Node> nodes_;
    bool backward_done_ = false;

    friend class Value;
};

}  // namespace liftaug
