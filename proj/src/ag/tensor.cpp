#include "ganaug/ag/tensor.hpp"

#include <optional>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "ganaug/ag/ops.hpp"

namespace ganaug::ag {

std::string Shape::str() const {
    std::ostringstream os;
    os << '[' << n << ',' << c << ',' << h << ',' << w << ']';
    return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(shape, 0.0f, requires_grad); }

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
    return from(shape, std::vector<float>(shape.numel(), value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<float> values, bool requires_grad) {
    if (values.size() != shape.numel()) {
        throw std::invalid_argument("tensor data size " + std::to_string(values.size()) + " does not match shape " +
                                    shape.str());
    }
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape;
    impl->data = std::move(values);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

float Tensor::item() const {
    if (numel() != 1) throw std::logic_error("item() on tensor of shape " + shape().str());
    return impl_->data[0];
}

float Tensor::at(int n, int c, int h, int w) const {
    const Shape& s = shape();
    return impl_->data[((static_cast<std::size_t>(n) * s.c + c) * s.h + h) * s.w + w];
}

Tensor Tensor::detach() const { return from(shape(), impl_->data, false); }

Tensor Tensor::clone_leaf(bool requires_grad) const { return from(shape(), impl_->data, requires_grad); }

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_result(Shape shape, std::vector<float> values, std::vector<Tensor> inputs, BackwardFn fn,
                   const char* name, bool twice_differentiable) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape;
    impl->data = std::move(values);
    if (g_grad_enabled) {
        bool any = false;
        for (const auto& t : inputs) any = any || t.requires_grad();
        if (any) {
            impl->requires_grad = true;
            impl->grad_fn = std::make_shared<Node>(std::move(inputs), std::move(fn), twice_differentiable, name);
        }
    }
    return Tensor(std::move(impl));
}

namespace {

// Post-order over the graph: every tensor appears after all of its inputs.
thread_local const std::vector<bool>* g_needs = nullptr;

struct NeedsGradScope {
    explicit NeedsGradScope(const std::vector<bool>* mask) : previous(g_needs) { g_needs = mask; }
    ~NeedsGradScope() { g_needs = previous; }
    const std::vector<bool>* previous;
};

std::vector<Tensor> topo_order(const Tensor& root) {
    std::vector<Tensor> order;
    std::unordered_set<const TensorImpl*> visited;
    struct Frame {
        Tensor t;
        std::size_t next;
    };
    std::vector<Frame> stack;
    stack.push_back({root, 0});
    visited.insert(root.impl());
    while (!stack.empty()) {
        Frame& f = stack.back();
        const auto& fn = f.t.grad_fn();
        if (fn && f.next < fn->inputs().size()) {
            const Tensor& in = fn->inputs()[f.next++];
            if (in.requires_grad() && visited.insert(in.impl()).second) stack.push_back({in, 0});
            continue;
        }
        order.push_back(f.t);
        stack.pop_back();
    }
    return order;
}

}  // namespace

bool needs_input_grad(std::size_t i) { return g_needs == nullptr || i >= g_needs->size() || (*g_needs)[i]; }

std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& wrt, bool create_graph,
                         const Tensor& grad_output) {
    std::optional<NoGradGuard> guard;
    if (!create_graph) guard.emplace();

    std::vector<Tensor> result;
    result.reserve(wrt.size());
    if (!output.requires_grad()) {
        for (const auto& t : wrt) result.push_back(Tensor::zeros(t.shape()));
        return result;
    }

    Tensor seed = grad_output;
    if (!seed.defined()) {
        if (output.numel() != 1) throw std::logic_error("grad() of non-scalar output needs grad_output");
        seed = Tensor::full(output.shape(), 1.0f);
    }

    std::unordered_map<const TensorImpl*, Tensor> grads;
    grads.emplace(output.impl(), seed);
    const auto order = topo_order(output);

    // A tensor matters only if some requested input lies below it.
    std::unordered_set<const TensorImpl*> relevant;
    for (const auto& w : wrt) relevant.insert(w.impl());
    for (const auto& t : order) {
        const auto& fn = t.grad_fn();
        if (!fn) continue;
        for (const auto& in : fn->inputs()) {
            if (relevant.count(in.impl())) {
                relevant.insert(t.impl());
                break;
            }
        }
    }

    std::vector<bool> mask;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Tensor& t = *it;
        const auto& fn = t.grad_fn();
        if (!fn || !relevant.count(t.impl())) continue;
        auto found = grads.find(t.impl());
        if (found == grads.end()) continue;
        if (create_graph && !fn->twice_differentiable()) {
            throw std::logic_error(std::string("op '") + fn->name() + "' does not support higher-order gradients");
        }
        const Tensor g = found->second;
        const auto& inputs = fn->inputs();
        mask.assign(inputs.size(), false);
        for (std::size_t i = 0; i < inputs.size(); ++i) mask[i] = relevant.count(inputs[i].impl()) > 0;
        std::vector<Tensor> input_grads;
        {
            NeedsGradScope scope(&mask);
            input_grads = fn->backward(g);
        }
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (!mask[i] || !input_grads[i].defined()) continue;
            auto [slot, inserted] = grads.try_emplace(inputs[i].impl(), input_grads[i]);
            if (!inserted) slot->second = add(slot->second, input_grads[i]);
        }
        // Interior gradients are no longer needed once propagated, unless requested.
        bool requested = false;
        for (const auto& w : wrt) requested = requested || w.impl() == t.impl();
        if (!requested) grads.erase(t.impl());
    }

    for (const auto& t : wrt) {
        auto found = grads.find(t.impl());
        result.push_back(found != grads.end() ? found->second : Tensor::zeros(t.shape()));
    }
    return result;
}

}  // namespace ganaug::ag
