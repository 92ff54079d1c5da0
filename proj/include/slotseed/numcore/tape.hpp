#pragma once

#include "slotseed/numcore/tensor.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace slotseed::num {

/// Ordered record of differentiable operations executed while the tape is active.
///
/// Operations append entries in execution order, so the reverse order is a valid
/// topological order: each entry is replayed after every entry that consumed its output.
/// A thread has at most one active tape; activate one with Tape::Scope.
class Tape {
  public:
    struct Entry {
        std::string op;
        std::vector<std::shared_ptr<Node>> inputs;
        std::shared_ptr<Node> output;
        std::function<void(const Entry&)> backward;
    };

    class Scope {
      public:
        explicit Scope(Tape& tape);
        ~Scope();
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

      private:
        Tape* previous_;
    };

    /// Suspends recording on this thread for its lifetime.
    class Pause {
      public:
        Pause();
        ~Pause();
        Pause(const Pause&) = delete;
        Pause& operator=(const Pause&) = delete;

      private:
        Tape* previous_;
    };

    static Tape* active();

    void record(std::string op, std::vector<std::shared_ptr<Node>> inputs,
                std::shared_ptr<Node> output, std::function<void(const Entry&)> backward);

    /// Seeds d(loss)/d(loss) = 1 and propagates to every requires_grad leaf.
    /// Gradients accumulate into leaves; intermediate gradients are released afterwards.
    void backward(const Tensor& loss);

    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }
    void clear() { entries_.clear(); }

  private:
    std::vector<Entry> entries_;
};

/// Scales the gradient an operation sends to its inputs. Test hook for gradient-check
/// fault injection; an empty name disables it.
void set_gradient_fault(std::string op, double factor);

} // namespace slotseed::num
