#include "liftaug/graph.hpp"

#include "liftaug/errors.hpp"
#include "liftaug/rng.hpp"

namespace liftaug {

Param& ParamStore::add(const std::string& name, Tensor init, bool trainable) {
    if (find(name)) throw ContractError("duplicate parameter name: " + name);
    auto p = std::make_unique<Param>();
    p->name = name;
    p->grad = Tensor::zeros(init.shape());
    p->value = std::move(init);
    p->trainable = trainable;
    params_.push_back(std::move(p));
    return *params_.back();
}

Param* ParamStore::find(const std::string& name) {
    for (auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

const Param* ParamStore::find(const std::string& name) const {
    for (auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

Param& ParamStore::at(const std::string& name) {
    if (Param* p = find(name)) return *p;
    throw ContractError("unknown parameter: " + name);
}

std::vector<Param*> ParamStore::all() {
    std::vector<Param*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Param*> ParamStore::all() const {
    std::vector<const Param*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<Param*> ParamStore::trainable() {
    std::vector<Param*> out;
    for (auto& p : params_)
        if (p->trainable) out.push_back(p.get());
    return out;
}

void ParamStore::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

long ParamStore::total_elements() const {
    long n = 0;
    for (auto& p : params_) n += p->value.numel();
    return n;
}

uint64_t ParamStore::value_hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (auto& p : params_) {
        h = hash_string(p->name, h);
        h = hash_bytes(p->value.data(), sizeof(double) * static_cast<size_t>(p->value.numel()), h);
    }
    return h;
}

const Tensor& Value::val() const { return tape_->value(index_); }

Tensor Value::grad() const {
    const Tape::Node& n = tape_->node(index_);
    if (n.has_grad) return n.grad;
    return Tensor::zeros(n.value.shape());
}

Value Tape::constant(Tensor v) {
    nodes_.push_back(Node{std::move(v), Tensor{}, false, false, nullptr});
    return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Tape::input(Tensor v) {
    nodes_.push_back(Node{std::move(v), Tensor{}, true, false, nullptr});
    return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Tape::leaf(Param& p, bool attach_grad) {
    bool track = p.trainable && attach_grad;
    BackFn fn = nullptr;
    if (track) {
        Param* target = &p;
        fn = [target](Tape&, const Tensor& g) { target->grad += g; };
    }
    nodes_.push_back(Node{p.value, Tensor{}, track, false, std::move(fn)});
    return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Tape::record(Tensor v, bool requires_grad, BackFn backward) {
    if (backward_done_)
        throw ContractError("tape already backpropagated; reset() before recording");
    nodes_.push_back(Node{std::move(v), Tensor{}, requires_grad,
                          false, requires_grad ? std::move(backward) : nullptr});
    return Value(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(int i, const Tensor& g) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (!n.requires_grad) return;
    if (!g.same_shape(n.value))
        throw ShapeError("gradient shape " + g.shape_str() + " vs value " + n.value.shape_str());
    if (!n.has_grad) {
        n.grad = g;
        n.has_grad = true;
    } else {
        n.grad += g;
    }
}

void Tape::backward(const Value& loss) {
    if (loss.tape() != this) throw ContractError("loss recorded on a different tape");
    if (backward_done_) throw ContractError("backward called twice on the same tape");
    const Node& ln = nodes_[static_cast<size_t>(loss.index())];
    if (ln.value.numel() != 1)
        throw ContractError("backward requires a scalar loss, got " + ln.value.shape_str());
    backward_done_ = true;
    if (!ln.requires_grad) return;
    accumulate(loss.index(), Tensor::full(ln.value.shape(), 1.0));
    for (int i = loss.index(); i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (n.has_grad && n.backward) n.backward(*this, n.grad);
    }
}

void Tape::reset() {
    nodes_.clear();
    backward_done_ = false;
}

}  // namespace liftaug
