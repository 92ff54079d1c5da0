#include "slotseed/numcore/tape.hpp"

namespace slotseed::num {

namespace {

thread_local Tape* active_tape = nullptr;

struct GradientFault {
    std::string op;
    double factor = 1.0;
};

GradientFault& fault() {
    static GradientFault instance;
    return instance;
}

} // namespace

Tape::Scope::Scope(Tape& tape) : previous_(active_tape) { active_tape = &tape; }
Tape::Scope::~Scope() { active_tape = previous_; }

Tape::Pause::Pause() : previous_(active_tape) { active_tape = nullptr; }
Tape::Pause::~Pause() { active_tape = previous_; }

Tape* Tape::active() { return active_tape; }

void set_gradient_fault(std::string op, double factor) {
    fault().op = std::move(op);
    fault().factor = factor;
}

void Tape::record(std::string op, std::vector<std::shared_ptr<Node>> inputs,
                  std::shared_ptr<Node> output, std::function<void(const Entry&)> backward) {
    entries_.push_back(Entry{std::move(op), std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) {
        throw DimensionError("backward needs a scalar loss, got " + shape_string(loss.dims()));
    }
    const auto& root = loss.node();
    root->ensure_grad();
    root->grad[0] += 1.0;

    const GradientFault& injected = fault();
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        const Entry& entry = *it;
        if (entry.output->grad.empty()) continue; // no path to the loss
        for (const auto& input : entry.inputs) {
            if (input->requires_grad) input->ensure_grad();
        }
        if (!injected.op.empty() && injected.op == entry.op) {
            std::vector<std::vector<double>> before;
            for (const auto& input : entry.inputs) before.push_back(input->grad);
            entry.backward(entry);
            for (std::size_t i = 0; i < entry.inputs.size(); ++i) {
                auto& g = entry.inputs[i]->grad;
                for (std::size_t j = 0; j < g.size() && j < before[i].size(); ++j) {
                    g[j] = before[i][j] + injected.factor * (g[j] - before[i][j]);
                }
            }
        } else {
            entry.backward(entry);
        }
    }

    for (const Entry& entry : entries_) {
        entry.output->grad.clear();
        entry.output->grad.shrink_to_fit();
    }
}

} // namespace slotseed::num
